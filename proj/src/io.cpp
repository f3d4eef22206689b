#include "nevil/io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace nevil {

namespace {

using nlohmann::json;

nlohmann::json number_or_inf(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  return v;
}

double number_from(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    throw InvalidArgument("expected a number, got \"" + s + "\"");
  }
  if (!j.is_number()) throw InvalidArgument("expected a number");
  return j.get<double>();
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  return in;
}

}  // namespace

void write_stream_file(std::ostream& out, std::span<const Frame> frames, const json& meta) {
  if (frames.empty() && !(meta.is_object() && meta.contains("dim"))) {
    throw InvalidArgument("cannot infer the feature dimension of an empty stream file; set meta.dim");
  }
  StreamFileHeader h;
  h.dim = frames.empty() ? meta.at("dim").get<std::size_t>() : frames.front().features.size();
  h.frames = frames.size();
  h.has_labels = !frames.empty();
  std::set<std::string> seen;
  for (const auto& f : frames) {
    if (f.features.size() != h.dim) throw DimensionMismatch("frames disagree on the feature dimension");
    if (seen.insert(f.stream_id).second) h.streams.push_back(f.stream_id);
    if (!f.true_label) h.has_labels = false;
  }
  if (meta.is_object()) h.meta = meta;
  h.meta.erase("dim");

  json header = {{"format", kStreamFormat}, {"version", h.version},       {"dim", h.dim},
                 {"frames", h.frames},      {"streams", h.streams},       {"has_labels", h.has_labels},
                 {"meta", h.meta}};
  out << header.dump() << '\n';
  for (const auto& f : frames) {
    json rec = {{"s", f.stream_id}, {"g", f.global_index}};
    if (f.true_label) rec["y"] = *f.true_label;
    rec["x"] = f.features;
    out << rec.dump() << '\n';
  }
  if (!out) throw Error("write failed");
}

StreamFile read_stream_file(std::istream& in) {
  StreamFile file;
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "missing header");
  try {
    const json h = json::parse(line);
    if (!h.is_object() || h.value("format", "") != kStreamFormat) throw ParseError(1, "not a nevil stream file");
    file.header.version = h.at("version").get<int>();
    if (file.header.version != kStreamVersion) {
      throw ParseError(1, "unsupported version " + std::to_string(file.header.version));
    }
    file.header.dim = h.at("dim").get<std::size_t>();
    file.header.frames = h.at("frames").get<std::size_t>();
    file.header.streams = h.at("streams").get<std::vector<std::string>>();
    file.header.has_labels = h.at("has_labels").get<bool>();
    if (h.contains("meta")) file.header.meta = h.at("meta");
  } catch (const json::exception& e) {
    throw ParseError(1, std::string("bad header: ") + e.what());
  }
  if (file.header.dim < 1) throw ParseError(1, "dim must be >= 1");
  const std::set<std::string> roster(file.header.streams.begin(), file.header.streams.end());

  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    Frame f;
    try {
      const json r = json::parse(line);
      if (!r.is_object()) throw ParseError(lineno, "record is not an object");
      f.stream_id = r.at("s").get<std::string>();
      f.global_index = r.at("g").get<std::int64_t>();
      f.features = r.at("x").get<std::vector<double>>();
      if (r.contains("y")) f.true_label = r.at("y").get<std::string>();
    } catch (const json::exception& e) {
      throw ParseError(lineno, std::string("malformed record: ") + e.what());
    }
    if (f.features.size() != file.header.dim) {
      throw ParseError(lineno, "expected " + std::to_string(file.header.dim) + " features, got " +
                                   std::to_string(f.features.size()));
    }
    if (!roster.count(f.stream_id)) throw ParseError(lineno, "stream '" + f.stream_id + "' not in the header roster");
    if (file.header.has_labels && !f.true_label) throw ParseError(lineno, "missing label");
    if (f.global_index < 0) throw ParseError(lineno, "negative global index");
    file.frames.push_back(std::move(f));
  }
  if (file.frames.size() != file.header.frames) {
    throw ParseError(lineno + 1, "header announces " + std::to_string(file.header.frames) + " frames, found " +
                                     std::to_string(file.frames.size()));
  }
  return file;
}

void save_stream_file(const std::filesystem::path& path, std::span<const Frame> frames, const json& meta) {
  std::ostringstream os;
  write_stream_file(os, frames, meta);
  write_text_file(path, os.str());
}

StreamFile load_stream_file(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_stream_file(in);
}

json to_json(const DecisionRecord& r) {
  return {{"slot", r.slot},
          {"stream", r.stream_id},
          {"frames", r.frames},
          {"predicted", r.predicted ? json(*r.predicted) : json(nullptr)},
          {"confidence", number_or_inf(r.confidence)},
          {"accepted", r.accepted},
          {"cold_start", r.cold_start},
          {"novel", r.novel},
          {"final", r.final_label},
          {"truth", r.truth ? json(*r.truth) : json(nullptr)}};
}

DecisionRecord decision_record_from_json(const json& j) {
  DecisionRecord r;
  r.slot = j.at("slot").get<std::int64_t>();
  r.stream_id = j.at("stream").get<std::string>();
  r.frames = j.at("frames").get<std::size_t>();
  if (!j.at("predicted").is_null()) r.predicted = j.at("predicted").get<std::string>();
  r.confidence = number_from(j.at("confidence"));
  r.accepted = j.at("accepted").get<bool>();
  r.cold_start = j.at("cold_start").get<bool>();
  r.novel = j.at("novel").get<bool>();
  r.final_label = j.at("final").get<std::string>();
  if (!j.at("truth").is_null()) r.truth = j.at("truth").get<std::string>();
  return r;
}

void write_decision_log(std::ostream& out, const RunReport& report) {
  json header = {{"log", "nevil-decisions"},
                 {"version", 1},
                 {"method", report.method},
                 {"seed", report.seed},
                 {"config", report.config},
                 {"registry", report.registry}};
  out << header.dump() << '\n';
  for (const auto& d : report.decisions) out << to_json(d).dump() << '\n';
}

RunReport read_decision_log(std::istream& in) {
  RunReport report;
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "missing header");
  try {
    const json h = json::parse(line);
    if (h.value("log", "") != "nevil-decisions") throw ParseError(1, "not a decision log");
    report.method = h.at("method").get<std::string>();
    report.seed = h.at("seed").get<std::uint64_t>();
    report.config = h.at("config");
    report.registry = h.at("registry").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw ParseError(1, std::string("bad header: ") + e.what());
  }
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    try {
      report.decisions.push_back(decision_record_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw ParseError(lineno, e.what());
    } catch (const InvalidArgument& e) {
      throw ParseError(lineno, e.what());
    }
  }
  report.slots = counters_from_decisions(report.decisions);
  return report;
}

json report_to_json(const RunReport& report) {
  json slots = json::array();
  for (const auto& s : report.slots) {
    slots.push_back({{"slot", s.slot}, {"N", s.total}, {"MC", s.misclassified}, {"MLB", s.manual}, {"TB", s.batches}});
  }
  std::size_t batches = 0;
  for (const auto& s : report.slots) batches += s.batches;
  return {{"report", "nevil-run"},
          {"version", 1},
          {"method", report.method},
          {"seed", report.seed},
          {"config", report.config},
          {"registry", report.registry},
          {"slots", slots},
          {"metrics",
           {{"accuracy", accuracy(report)},
            {"annotation_effort", annotation_effort(report)},
            {"queries", report.queries()},
            {"batches", batches}}}};
}

void write_report(std::ostream& out, const RunReport& report) { out << report_to_json(report).dump(2) << '\n'; }

namespace {

json gaussian_json(const DiagGaussian& g) { return {{"mean", g.mean}, {"var", g.var}}; }

DiagGaussian gaussian_from(const json& j) {
  return {j.at("mean").get<std::vector<double>>(), j.at("var").get<std::vector<double>>()};
}

json gaussians_json(const std::vector<DiagGaussian>& v) {
  json a = json::array();
  for (const auto& g : v) a.push_back(gaussian_json(g));
  return a;
}

std::vector<DiagGaussian> gaussians_from(const json& j) {
  std::vector<DiagGaussian> v;
  for (const auto& e : j) v.push_back(gaussian_from(e));
  return v;
}

struct ParamsToJson {
  json operator()(const GaussianNbParams& p) const {
    return {{"classes", gaussians_json(p.classes)}, {"log_prior", p.log_prior}};
  }
  json operator()(const GmmParams& p) const {
    json classes = json::array();
    for (const auto& m : p.classes) {
      classes.push_back({{"log_weight", m.log_weight}, {"components", gaussians_json(m.components)}});
    }
    return {{"classes", classes}, {"log_prior", p.log_prior}};
  }
  json operator()(const LogisticParams& p) const {
    return {{"shift", p.shift}, {"scale", p.scale}, {"weights", p.weights}, {"bias", p.bias}};
  }
  json operator()(const OneClassParams& p) const {
    return {{"density", gaussian_json(p.density)}, {"log_threshold", p.log_threshold}, {"scale", p.scale}};
  }
};

EnsembleMember::Params params_from(ClassifierKind kind, const json& j) {
  switch (kind) {
    case ClassifierKind::gaussian_nb:
      return GaussianNbParams{gaussians_from(j.at("classes")), j.at("log_prior").get<std::vector<double>>()};
    case ClassifierKind::gmm: {
      GmmParams p;
      for (const auto& c : j.at("classes")) {
        p.classes.push_back({c.at("log_weight").get<std::vector<double>>(), gaussians_from(c.at("components"))});
      }
      p.log_prior = j.at("log_prior").get<std::vector<double>>();
      return p;
    }
    case ClassifierKind::logistic:
      return LogisticParams{j.at("shift").get<std::vector<double>>(), j.at("scale").get<std::vector<double>>(),
                            j.at("weights").get<std::vector<double>>(), j.at("bias").get<std::vector<double>>()};
    case ClassifierKind::one_class:
      return OneClassParams{gaussian_from(j.at("density")), j.at("log_threshold").get<double>(),
                            j.at("scale").get<double>()};
  }
  throw InvalidArgument("unknown member kind");
}

}  // namespace

json model_to_json(const CompositeModel& model) {
  json members = json::array();
  for (std::size_t i = 0; i < model.size(); ++i) {
    const auto& m = model.member(i);
    members.push_back({{"kind", to_string(m.kind())},
                       {"known_labels", m.known_labels()},
                       {"dim", m.dim()},
                       {"trained_slot", m.trained_slot()},
                       {"params", std::visit(ParamsToJson{}, m.params())},
                       {"support",
                        {{"classes", gaussians_json(m.support().classes)},
                         {"log_threshold", m.support().log_threshold}}}});
  }
  return {{"format", "nevil-model"},
          {"version", kModelVersion},
          {"decay_base", model.decay_base()},
          {"registry", model.registry().names()},
          {"members", members}};
}

CompositeModel model_from_json(const json& j) {
  try {
    if (j.value("format", "") != "nevil-model") throw InvalidArgument("not a model snapshot");
    const int version = j.at("version").get<int>();
    if (version != kModelVersion) throw InvalidArgument("unsupported model version " + std::to_string(version));
    CompositeModel model(j.at("decay_base").get<double>(),
                         ClassRegistry(j.at("registry").get<std::vector<std::string>>()));
    for (const auto& m : j.at("members")) {
      const ClassifierKind kind = classifier_kind_from_string(m.at("kind").get<std::string>());
      SupportModel support{gaussians_from(m.at("support").at("classes")),
                           m.at("support").at("log_threshold").get<std::vector<double>>()};
      EnsembleMember member(kind, m.at("known_labels").get<std::vector<ClassId>>(), params_from(kind, m.at("params")),
                            std::move(support), m.at("dim").get<std::size_t>(), m.at("trained_slot").get<std::int64_t>());
      model = model.append_member(std::move(member), {});
    }
    return model;
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("bad model snapshot: ") + e.what());
  }
}

json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("'" + path.string() + "': " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw Error("write to '" + path.string() + "' failed");
}

}  // namespace nevil
