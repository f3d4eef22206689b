#ifndef NEVIL_ORACLE_HPP_
#define NEVIL_ORACLE_HPP_

#include <cstddef>
#include <string>

#include "nevil/loop.hpp"

namespace nevil {

// Simulated annotator: answers with the batch's majority ground-truth label.
// Ties go to the label registered first, then to the smallest name.
class ScriptedOracle : public Oracle {
 public:
  std::string label(const Batch& batch, const QueryContext& context) override;
  std::size_t calls() const { return calls_; }

 private:
  std::size_t calls_ = 0;
};

}  // namespace nevil

#endif  // NEVIL_ORACLE_HPP_
