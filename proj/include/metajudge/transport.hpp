#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "metajudge/detail/sha256.hpp"
#include "metajudge/detail/strings.hpp"
#include "metajudge/errors.hpp"

namespace metajudge {

struct ChatMessage {
  std::string role;  // "system" | "user" | "assistant"
  std::string content;
};

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  int max_output_tokens = 1024;
};

struct ChatResult {
  std::string text;
  std::int64_t input_tokens = 0;
  std::int64_t output_tokens = 0;
};

// One chat completion round-trip. Implementations must be safe to call from
// multiple threads.
class ChatTransport {
public:
  virtual ~ChatTransport() = default;
  virtual ChatResult complete(const ChatRequest& request) = 0;
};

// Canonical request text used for fixture keying and synthetic generation.
inline std::string request_text(const ChatRequest& request) {
  std::ostringstream out;
  for (const auto& message : request.messages) {
    out << message.role << ":\n" << message.content << "\n\n";
  }
  return out.str();
}

inline std::string prompt_digest(const ChatRequest& request) {
  return detail::sha256_hex(request_text(request));
}

// Crude but deterministic token estimate for offline transports.
inline std::int64_t estimate_tokens(std::string_view text) {
  return static_cast<std::int64_t>((text.size() + 3) / 4);
}

// Adapter for test doubles: wraps a callable as a transport.
class CallbackTransport : public ChatTransport {
public:
  using Fn = std::function<std::string(const ChatRequest&)>;
  explicit CallbackTransport(Fn fn) : fn_(std::move(fn)) {}

  ChatResult complete(const ChatRequest& request) override {
    std::string text = fn_(request);
    return {text, estimate_tokens(request_text(request)), estimate_tokens(text)};
  }

private:
  Fn fn_;
};

// Replays recorded responses from a directory of text files named by the
// sha256 hex digest of the prompt. Missing fixtures are transport errors so
// gaps surface instead of silently producing garbage.
class ScriptedFileTransport : public ChatTransport {
public:
  explicit ScriptedFileTransport(std::filesystem::path dir) : dir_(std::move(dir)) {}

  ChatResult complete(const ChatRequest& request) override {
    const std::string digest = prompt_digest(request);
    const std::filesystem::path path = dir_ / (digest + ".txt");
    std::ifstream in(path, std::ios::binary);
    if (!in) {
      throw TransportError("no scripted response for prompt digest " + digest +
                           " under " + dir_.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    std::string text = buffer.str();
    return {text, estimate_tokens(request_text(request)), estimate_tokens(text)};
  }

private:
  std::filesystem::path dir_;
};

// Sentinel fragments of the rendered answer-format instructions. The
// synthetic transport keys its response shape off these, so fully offline
// runs still exercise the real render -> transport -> parse path.
inline constexpr std::string_view kBinaryInstructionSentinel = "result: [correct/wrong]";
inline constexpr std::string_view kPerCriterionInstructionSentinel =
    "For each criterion, respond strictly";
inline constexpr std::string_view kOverallInstructionSentinel =
    "Score: [1-5], Explanation:";
inline constexpr std::string_view kJudgeInstructionSentinel =
    "\"[A > B]\" or \"[B > A]\"";
inline constexpr std::string_view kRefineInstructionSentinel =
    "Expand every criterion into the block format";

// Deterministic stand-in model: derives a response from the sha256 of
// (salt, prompt). Same salt and prompt always produce the same bytes, and
// different salts behave like different models.
class SyntheticTransport : public ChatTransport {
public:
  explicit SyntheticTransport(std::string salt) : salt_(std::move(salt)) {}

  ChatResult complete(const ChatRequest& request) override {
    const std::string prompt = request_text(request);
    detail::Sha256 hasher;
    hasher.update(salt_);
    hasher.update("\n");
    hasher.update(prompt);
    const auto digest = hasher.digest();

    std::string text = generate(prompt, digest);
    return {text, estimate_tokens(prompt), estimate_tokens(text)};
  }

private:
  static std::vector<std::string> scan_criterion_names(std::string_view prompt) {
    std::vector<std::string> names;
    for (const auto& line : detail::split_lines(prompt)) {
      std::string_view view = detail::trim(line);
      constexpr std::string_view prefix = "Criterion: ";
      if (view.size() <= prefix.size() || view.substr(0, prefix.size()) != prefix) {
        continue;
      }
      std::string name(detail::trim(view.substr(prefix.size())));
      if (name.empty() || name.front() == '<') continue;  // instruction placeholder
      if (std::find(names.begin(), names.end(), name) == names.end()) {
        names.push_back(std::move(name));
      }
    }
    return names;
  }

  std::string generate(std::string_view prompt,
                       const std::array<std::uint8_t, 32>& digest) const {
    auto score_at = [&digest](std::size_t index) {
      return 1 + digest[index % digest.size()] % 5;
    };

    if (detail::contains(prompt, kBinaryInstructionSentinel)) {
      const bool correct = (digest[0] & 1) == 0;
      std::ostringstream out;
      out << "result: " << (correct ? "correct" : "wrong")
          << ", Explanation: synthetic verdict " << static_cast<int>(digest[1]) << ".";
      return out.str();
    }
    if (detail::contains(prompt, kPerCriterionInstructionSentinel)) {
      const auto names = scan_criterion_names(prompt);
      std::ostringstream out;
      for (std::size_t i = 0; i < names.size(); ++i) {
        if (i > 0) out << "\n";
        out << "Criterion: " << names[i] << "\n";
        out << "Score: " << score_at(i) << "\n";
        out << "Explanation: synthetic assessment " << static_cast<int>(digest[(i + 7) % 32])
            << " of " << names[i] << ".";
        if (i + 1 < names.size()) out << "\n";
      }
      return out.str();
    }
    if (detail::contains(prompt, kRefineInstructionSentinel)) {
      const auto names = scan_criterion_names(prompt);
      std::ostringstream out;
      out.precision(17);
      const double weight = names.empty() ? 1.0 : 1.0 / static_cast<double>(names.size());
      for (std::size_t i = 0; i < names.size(); ++i) {
        if (i > 0) out << "\n";
        out << "Criterion: " << names[i] << "\n";
        out << "Weight: " << weight << "\n";
        out << "Description: Synthetic guidance for " << names[i] << ".\n";
        for (int score = 1; score <= 5; ++score) {
          out << "Score " << score << ": Synthetic anchor " << score << " for "
              << names[i] << ".\n";
        }
      }
      return out.str();
    }
    if (detail::contains(prompt, kOverallInstructionSentinel)) {
      std::ostringstream out;
      out << "Score: " << score_at(0) << ", Explanation: synthetic overall assessment "
          << static_cast<int>(digest[2]) << ".";
      return out.str();
    }
    if (detail::contains(prompt, kJudgeInstructionSentinel)) {
      const bool a_wins = (digest[0] & 1) == 0;
      std::ostringstream out;
      out << (a_wins ? "[A > B]" : "[B > A]") << "\nExplanation: synthetic judgment "
          << static_cast<int>(digest[3]) << ".";
      return out.str();
    }
    return "OK.";
  }

  std::string salt_;
};

// fixture id schemes: "synthetic:<salt>" and "file:<directory>".
inline std::shared_ptr<ChatTransport> make_scripted_transport(const std::string& fixture_id) {
  constexpr std::string_view synthetic_scheme = "synthetic:";
  constexpr std::string_view file_scheme = "file:";
  if (fixture_id.rfind(synthetic_scheme, 0) == 0) {
    return std::make_shared<SyntheticTransport>(
        fixture_id.substr(synthetic_scheme.size()));
  }
  if (fixture_id.rfind(file_scheme, 0) == 0) {
    return std::make_shared<ScriptedFileTransport>(fixture_id.substr(file_scheme.size()));
  }
  throw ValidationError("unknown scripted fixture id '" + fixture_id +
                        "' (expected synthetic:<salt> or file:<dir>)");
}

}  // namespace metajudge
