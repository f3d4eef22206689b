#ifndef NEVIL_IO_HPP_
#define NEVIL_IO_HPP_

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nevil/ensemble.hpp"
#include "nevil/loop.hpp"
#include "nevil/report.hpp"
#include "nevil/stream_model.hpp"

namespace nevil {

// Stream file: JSON lines. Line 1 is the header
//   {"format":"nevil-stream","version":1,"dim":d,"frames":n,"streams":[...],
//    "has_labels":bool,"meta":{...}}
// followed by one frame per line: {"s":stream,"g":global index,"y":label?,"x":[...]}.
inline constexpr const char* kStreamFormat = "nevil-stream";
inline constexpr int kStreamVersion = 1;

struct StreamFileHeader {
  int version = kStreamVersion;
  std::size_t dim = 0;
  std::size_t frames = 0;
  std::vector<std::string> streams;
  bool has_labels = false;
  // Provenance: generator seed and config, PCA source, and so on.
  nlohmann::json meta = nlohmann::json::object();
};

struct StreamFile {
  StreamFileHeader header;
  std::vector<Frame> frames;
};

// Header fields are derived from the frames; `meta` is copied in.
void write_stream_file(std::ostream& out, std::span<const Frame> frames, const nlohmann::json& meta = {});
// Throws ParseError with the 1-based line of the first offending record.
StreamFile read_stream_file(std::istream& in);

void save_stream_file(const std::filesystem::path& path, std::span<const Frame> frames, const nlohmann::json& meta = {});
StreamFile load_stream_file(const std::filesystem::path& path);

// Decision log: a header record followed by one record per batch.
nlohmann::json to_json(const DecisionRecord& record);
DecisionRecord decision_record_from_json(const nlohmann::json& j);
void write_decision_log(std::ostream& out, const RunReport& report);
// Rebuilds the report (counters included) from a decision log.
RunReport read_decision_log(std::istream& in);

nlohmann::json report_to_json(const RunReport& report);
void write_report(std::ostream& out, const RunReport& report);

// Versioned snapshot of a composite model.
inline constexpr int kModelVersion = 1;
nlohmann::json model_to_json(const CompositeModel& model);
CompositeModel model_from_json(const nlohmann::json& j);

// Reads a JSON document, raising ConfigError on failure.
nlohmann::json load_json(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace nevil

#endif  // NEVIL_IO_HPP_
