#pragma once

// Agent-assisted rubric refinement: expands a human-crafted skeleton
// (criterion names plus one-line notes) into a full scoring rubric.
// Optional tooling; the shipped rubric variants do not depend on it.

#include <sstream>
#include <string>
#include <vector>

#include "metajudge/agents.hpp"
#include "metajudge/errors.hpp"
#include "metajudge/rubric.hpp"
#include "metajudge/transport.hpp"

namespace metajudge {

struct CriterionSkeleton {
  std::string name;
  std::string note;  // one-line human description
};

inline std::string render_refine_prompt(const std::vector<CriterionSkeleton>& skeleton) {
  std::ostringstream out;
  out << "You are designing a meta-judging rubric. " << kRefineInstructionSentinel
      << " below, assigning each criterion a weight (weights must sum to 1), a "
         "detailed description, and five score anchors:\n\n"
      << "Criterion: <name>\n"
         "Weight: <decimal weight>\n"
         "Description: <detailed description>\n"
         "Score 1: <what warrants the lowest score>\n"
         "Score 2: ...\n"
         "Score 3: ...\n"
         "Score 4: ...\n"
         "Score 5: <what warrants the highest score>\n\n"
      << "The criteria to expand:\n\n";
  for (const auto& entry : skeleton) {
    out << "Criterion: " << entry.name << "\n";
    if (!entry.note.empty()) out << "Note: " << entry.note << "\n";
  }
  return out.str();
}

// Sends the skeleton through the refiner agent and parses the reply into a
// validated rubric whose criterion names match the skeleton exactly.
inline Rubric refine_rubric(const AgentConfig& refiner,
                            const std::vector<CriterionSkeleton>& skeleton,
                            const TransportFactory& transports,
                            RubricVariant variant = RubricVariant::Long) {
  if (skeleton.empty()) {
    throw PreconditionError("refine_rubric: empty criterion skeleton");
  }

  ChatRequest request;
  request.model = std::holds_alternative<RemoteChatBackend>(refiner.backend)
                      ? std::get<RemoteChatBackend>(refiner.backend).model
                      : refiner.agent_id;
  request.messages.push_back({"user", render_refine_prompt(skeleton)});

  auto transport = transports(refiner);
  const ChatResult response = complete_with_retries(*transport, request, refiner);

  Rubric rubric = parse_rubric_text(response.text, variant);

  if (rubric.criteria.size() != skeleton.size()) {
    throw RefinementParseError("refiner returned " +
                                   std::to_string(rubric.criteria.size()) +
                                   " criteria, expected " + std::to_string(skeleton.size()),
                               response.text);
  }
  for (std::size_t i = 0; i < skeleton.size(); ++i) {
    if (rubric.criteria[i].name != skeleton[i].name) {
      throw RefinementParseError("refiner changed criterion name '" + skeleton[i].name +
                                     "' to '" + rubric.criteria[i].name + "'",
                                 response.text);
    }
  }
  if (auto violations = validate_rubric(rubric); !violations.empty()) {
    std::string message = "refined rubric failed validation:";
    for (const auto& violation : violations) message += " [" + violation.code + "]";
    throw RefinementParseError(message, response.text);
  }
  return rubric;
}

}  // namespace metajudge
