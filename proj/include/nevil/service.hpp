#ifndef NEVIL_SERVICE_HPP_
#define NEVIL_SERVICE_HPP_

#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "nevil/loop.hpp"

namespace nevil {

inline constexpr std::size_t kQueryMaxPoints = 64;

struct LabelQuery {
  // Deterministic: "q<seq>-t<slot>-<stream>", so a restarted run asks the
  // same question under the same id.
  std::string id;
  std::size_t seq = 0;
  std::int64_t slot = 0;
  std::string stream_id;
  std::size_t frames = 0;
  std::size_t dim = 0;
  // Up to 64 evenly spaced frames, first two features each (one for 1-D data).
  std::vector<std::vector<double>> points;
  std::vector<double> feature_mean;
  std::vector<std::pair<std::string, double>> candidates;
  std::string created_at;
};

nlohmann::json to_json(const LabelQuery& q);
LabelQuery make_label_query(std::size_t seq, const Batch& batch, const QueryContext& context);

struct ServiceOptions {
  // Holds answers.jsonl; empty disables journaling.
  std::filesystem::path run_dir;
  // Zero waits forever.
  std::chrono::milliseconds answer_timeout{0};
};

struct HttpResponse {
  int status = 200;
  std::string body;
};

// Oracle whose answers arrive over HTTP. label() blocks the loop until the
// matching POST lands; answers are journaled and replayed on restart.
class OracleService : public Oracle {
 public:
  explicit OracleService(ServiceOptions options = {});

  std::string label(const Batch& batch, const QueryContext& context) override;

  // Observer hooks for the run.
  void set_horizon(std::int64_t horizon);
  void on_slot(const TimeSlotView& slot, const SlotOutcome& outcome);
  void set_report(const RunReport& report);
  void set_failed(const std::string& message);
  // Wakes a blocked label() with OracleFailure.
  void shutdown();

  // Endpoint handlers, usable without a socket.
  HttpResponse get_query() const;
  HttpResponse post_label(const std::string& id, const std::string& body);
  HttpResponse get_status() const;
  HttpResponse get_report() const;

  std::size_t replayed() const;

 private:
  void journal(const std::string& id, const std::string& label);

  ServiceOptions options_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::map<std::string, std::string> journal_;
  std::size_t seq_ = 0;
  std::size_t replayed_ = 0;
  std::optional<LabelQuery> pending_;
  std::optional<std::string> answer_;
  bool shutdown_ = false;

  std::int64_t horizon_ = -1;
  std::int64_t last_slot_ = -1;
  std::vector<DecisionRecord> records_;
  std::vector<std::string> registry_;
  std::optional<std::string> report_;
  std::optional<std::string> failure_;
};

// Binds the handlers to a cpp-httplib server on a background thread.
class HttpServer {
 public:
  explicit HttpServer(OracleService& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Port 0 picks a free port. Returns the bound port.
  int start(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::thread thread_;
};

// --port wins, then NEVIL_PORT, then 8080.
int resolve_port(std::optional<int> flag);

}  // namespace nevil

#endif  // NEVIL_SERVICE_HPP_
