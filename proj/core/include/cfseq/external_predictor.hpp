#pragma once

#include <filesystem>
#include <string>

#include "cfseq/encoder.hpp"
#include "cfseq/predictor.hpp"

namespace cfseq {

/// Delegates scoring to an external program through files.
///
/// For every batch the traces are decoded and written as an event log CSV
/// (`case_id,activity,outcome[,attributes...]`, case ids `q000000`, ...). The
/// command is run as `<command> <input.csv> <output.csv>` and must write a CSV
/// with header `case_id,proba` holding one row per requested case.
class ExternalPredictor final : public OutcomePredictor {
 public:
  ExternalPredictor(std::string command, EncoderSpec encoder,
                    std::filesystem::path work_dir = std::filesystem::temp_directory_path());

  double predict_proba(const EncodedTrace& trace) const override;
  std::vector<double> predict_batch(std::span<const EncodedTrace> traces) const override;

  const std::string& command() const noexcept { return command_; }

 private:
  std::string command_;
  EncoderSpec encoder_;
  std::filesystem::path work_dir_;
};

}  // namespace cfseq
