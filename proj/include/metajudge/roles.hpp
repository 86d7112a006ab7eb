#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "metajudge/detail/strings.hpp"

namespace metajudge {

enum class Role { GeneralPublic, Expert, Critic, Summarizer };

struct RolePersona {
  Role role = Role::GeneralPublic;
  std::string preamble;

  friend bool operator==(const RolePersona&, const RolePersona&) = default;
};

inline std::string_view to_string(Role role) {
  switch (role) {
    case Role::GeneralPublic: return "general_public";
    case Role::Expert: return "expert";
    case Role::Critic: return "critic";
    case Role::Summarizer: return "summarizer";
  }
  return "general_public";
}

inline std::optional<Role> parse_role(std::string_view text) {
  const std::string lowered = detail::to_lower(detail::trim(text));
  if (lowered == "general_public" || lowered == "general-public" ||
      lowered == "public") {
    return Role::GeneralPublic;
  }
  if (lowered == "expert") return Role::Expert;
  if (lowered == "critic") return Role::Critic;
  if (lowered == "summarizer" || lowered == "summarization") return Role::Summarizer;
  return std::nullopt;
}

inline RolePersona persona_for(Role role) {
  switch (role) {
    case Role::GeneralPublic:
      return {role,
              "You are a general public meta-judge assistant designed to ensure "
              "fairness in evaluating the quality of the judgment and decision "
              "made by a judge assistant."};
    case Role::Expert:
      return {role,
              "You are an expert meta-judge assistant with advanced expertise in "
              "evaluating the quality of the judgment and decision made by a "
              "judge assistant."};
    case Role::Critic:
      return {role,
              "You are a critic meta-judge assistant tasked with providing "
              "critical analysis in evaluating the quality of the judgement and "
              "decision made by a judge assistant."};
    case Role::Summarizer:
      return {role,
              "You are a meta-judge coordinator assistant in aggregating the "
              "meta-judgments from other agents."};
  }
  return {};
}

}  // namespace metajudge
