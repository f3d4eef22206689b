#include "nevil/oracle.hpp"

namespace nevil {

std::string ScriptedOracle::label(const Batch& batch, const QueryContext& context) {
  auto answer = majority_label(batch, context.registry);
  if (!answer) throw OracleFailure("batch of stream '" + batch.stream_id + "' carries no ground truth");
  ++calls_;
  return *answer;
}

}  // namespace nevil
