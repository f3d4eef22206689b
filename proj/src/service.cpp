#include "nevil/service.hpp"

#include <cstdlib>
#include <ctime>
#include <fstream>

#include <httplib.h>

#include "nevil/io.hpp"

namespace nevil {

using nlohmann::json;

namespace {

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

HttpResponse json_response(int status, const json& body) { return {status, body.dump()}; }
HttpResponse error_response(int status, const std::string& message) {
  return json_response(status, {{"error", message}});
}

}  // namespace

json to_json(const LabelQuery& q) {
  json candidates = json::array();
  for (const auto& [name, p] : q.candidates) candidates.push_back({{"label", name}, {"probability", p}});
  return {{"id", q.id},
          {"seq", q.seq},
          {"slot", q.slot},
          {"stream", q.stream_id},
          {"frames", q.frames},
          {"dim", q.dim},
          {"points", q.points},
          {"feature_mean", q.feature_mean},
          {"candidates", candidates},
          {"created_at", q.created_at}};
}

LabelQuery make_label_query(std::size_t seq, const Batch& batch, const QueryContext& context) {
  LabelQuery q;
  q.seq = seq;
  q.slot = context.slot;
  q.stream_id = batch.stream_id;
  q.id = "q" + std::to_string(seq) + "-t" + std::to_string(context.slot) + "-" + batch.stream_id;
  q.frames = batch.size();
  q.dim = batch.frames.empty() ? 0 : batch.frames.front().features.size();
  q.feature_mean.assign(q.dim, 0.0);
  for (const auto& f : batch.frames) {
    for (std::size_t i = 0; i < q.dim; ++i) q.feature_mean[i] += f.features[i] / static_cast<double>(q.frames);
  }
  const std::size_t keep = std::min(kQueryMaxPoints, q.frames);
  for (std::size_t k = 0; k < keep; ++k) {
    const auto& x = batch.frames[k * q.frames / keep].features;
    q.points.emplace_back(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(2, x.size())));
  }
  q.candidates = context.candidates;
  q.created_at = utc_now();
  return q;
}

OracleService::OracleService(ServiceOptions options) : options_(std::move(options)) {
  if (options_.run_dir.empty()) return;
  std::filesystem::create_directories(options_.run_dir);
  std::ifstream in(options_.run_dir / "answers.jsonl");
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      journal_[j.at("id").get<std::string>()] = j.at("label").get<std::string>();
    } catch (const json::exception& e) {
      throw ParseError(lineno, std::string("answers journal: ") + e.what());
    }
  }
}

void OracleService::journal(const std::string& id, const std::string& label) {
  if (options_.run_dir.empty()) return;
  std::ofstream out(options_.run_dir / "answers.jsonl", std::ios::app);
  out << json{{"id", id}, {"label", label}}.dump() << '\n';
  out.flush();
  if (!out) throw OracleFailure("cannot append to the answers journal");
}

std::string OracleService::label(const Batch& batch, const QueryContext& context) {
  std::unique_lock<std::mutex> lock(mu_);
  LabelQuery q = make_label_query(seq_, batch, context);
  if (auto it = journal_.find(q.id); it != journal_.end()) {
    ++seq_;
    ++replayed_;
    return it->second;
  }
  if (shutdown_) throw OracleFailure("oracle service is shut down");
  pending_ = std::move(q);
  answer_.reset();
  auto ready = [&] { return answer_.has_value() || shutdown_; };
  if (options_.answer_timeout.count() > 0) {
    if (!cv_.wait_for(lock, options_.answer_timeout, ready)) {
      // The query stays pending under the same id; a retry re-exposes it.
      pending_.reset();
      throw OracleFailure("timed out waiting for a label");
    }
  } else {
    cv_.wait(lock, ready);
  }
  if (!answer_) {
    pending_.reset();
    throw OracleFailure("oracle service is shut down");
  }
  std::string out = std::move(*answer_);
  answer_.reset();
  pending_.reset();
  ++seq_;
  return out;
}

void OracleService::set_horizon(std::int64_t horizon) {
  std::lock_guard<std::mutex> lock(mu_);
  horizon_ = horizon;
}

void OracleService::on_slot(const TimeSlotView& slot, const SlotOutcome& outcome) {
  std::lock_guard<std::mutex> lock(mu_);
  last_slot_ = slot.slot_index;
  records_.insert(records_.end(), outcome.records.begin(), outcome.records.end());
  registry_ = outcome.next.model.registry().names();
}

void OracleService::set_report(const RunReport& report) {
  json j = report_to_json(report);
  json decisions = json::array();
  for (const auto& d : report.decisions) decisions.push_back(to_json(d));
  j["decisions"] = std::move(decisions);
  std::lock_guard<std::mutex> lock(mu_);
  report_ = j.dump();
  registry_ = report.registry;
}

void OracleService::set_failed(const std::string& message) {
  std::lock_guard<std::mutex> lock(mu_);
  failure_ = message;
}

void OracleService::shutdown() {
  {
    std::lock_guard<std::mutex> lock(mu_);
    shutdown_ = true;
  }
  cv_.notify_all();
}

std::size_t OracleService::replayed() const {
  std::lock_guard<std::mutex> lock(mu_);
  return replayed_;
}

HttpResponse OracleService::get_query() const {
  std::lock_guard<std::mutex> lock(mu_);
  if (!pending_) return {204, ""};
  return json_response(200, to_json(*pending_));
}

HttpResponse OracleService::post_label(const std::string& id, const std::string& body) {
  std::string label;
  try {
    const json j = json::parse(body);
    if (!j.is_object() || !j.contains("label") || !j["label"].is_string()) {
      return error_response(400, "body must be {\"label\": \"<name>\"}");
    }
    label = j["label"].get<std::string>();
  } catch (const json::exception&) {
    return error_response(400, "body is not valid JSON");
  }
  if (label.empty()) return error_response(400, "label must not be empty");
  {
    std::lock_guard<std::mutex> lock(mu_);
    if (!pending_ || pending_->id != id || answer_) return error_response(409, "query '" + id + "' is not pending");
    try {
      journal(id, label);
    } catch (const std::exception& e) {
      return error_response(500, e.what());
    }
    answer_ = label;
  }
  cv_.notify_all();
  return json_response(200, {{"id", id}, {"label", label}});
}

HttpResponse OracleService::get_status() const {
  std::lock_guard<std::mutex> lock(mu_);
  RunReport live;
  live.decisions = records_;
  live.slots = counters_from_decisions(records_);
  json decisions = json::array();
  for (const auto& d : records_) decisions.push_back(to_json(d));
  const char* state = failure_ ? "failed" : report_ ? "done" : "running";
  json j = {{"state", state},
            {"slots_done", last_slot_ + 1},
            {"horizon", horizon_},
            {"registry", registry_},
            {"accuracy", accuracy(live)},
            {"annotation_effort", annotation_effort(live)},
            {"queries", live.queries()},
            {"batches", records_.size()},
            {"pending", pending_ ? json(pending_->id) : json(nullptr)},
            {"decisions", decisions}};
  if (failure_) j["error"] = *failure_;
  return json_response(200, j);
}

HttpResponse OracleService::get_report() const {
  std::lock_guard<std::mutex> lock(mu_);
  if (!report_) return {204, ""};
  return {200, *report_};
}

struct HttpServer::Impl {
  httplib::Server server;
};

namespace {

void send(httplib::Response& res, const HttpResponse& r) {
  res.status = r.status;
  if (!r.body.empty()) res.set_content(r.body, "application/json");
}

}  // namespace

HttpServer::HttpServer(OracleService& service) : impl_(std::make_unique<Impl>()) {
  auto& s = impl_->server;
  s.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                         {"Access-Control-Allow-Headers", "Content-Type"},
                         {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  s.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  s.Get("/api/query", [&service](const httplib::Request&, httplib::Response& res) { send(res, service.get_query()); });
  s.Post(R"(/api/query/([^/]+)/label)", [&service](const httplib::Request& req, httplib::Response& res) {
    send(res, service.post_label(req.matches[1], req.body));
  });
  s.Get("/api/status", [&service](const httplib::Request&, httplib::Response& res) { send(res, service.get_status()); });
  s.Get("/api/report", [&service](const httplib::Request&, httplib::Response& res) { send(res, service.get_report()); });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start(const std::string& host, int port) {
  auto& s = impl_->server;
  int bound = port;
  if (port == 0) {
    bound = s.bind_to_any_port(host.c_str());
  } else if (!s.bind_to_port(host.c_str(), port)) {
    bound = -1;
  }
  if (bound < 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([&s] { s.listen_after_bind(); });
  s.wait_until_ready();
  return bound;
}

void HttpServer::stop() {
  if (impl_) impl_->server.stop();
  if (thread_.joinable()) thread_.join();
}

int resolve_port(std::optional<int> flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("NEVIL_PORT")) {
    try {
      std::size_t used = 0;
      const int p = std::stoi(env, &used);
      if (used == std::string(env).size() && p >= 0 && p < 65536) return p;
    } catch (const std::exception&) {
    }
    throw ConfigError(std::string("NEVIL_PORT is not a port number: '") + env + "'");
  }
  return 8080;
}

}  // namespace nevil
