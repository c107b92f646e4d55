#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "riskelicit/learner.hpp"
#include "riskelicit/serialization.hpp"

namespace httplib {
class Server;
}

namespace riskelicit {

/// Error surfaced to HTTP clients as {"error":{"code","message"}} with `status`.
class ServiceError : public std::runtime_error {
 public:
  ServiceError(int status, std::string code, const std::string& message)
      : std::runtime_error(message), status_(status), code_(std::move(code)) {}
  int status() const { return status_; }
  const std::string& code() const { return code_; }

 private:
  int status_;
  std::string code_;
};

/// Validated session parameters, parsed from the POST /sessions body.
struct SessionSpec {
  std::vector<double> loss_levels;  // canonical states; the cost is the identity
  std::vector<RiskAversion> candidates;
  std::vector<std::string> labels;
  std::size_t pool_size = 500;
  std::size_t num_actions = 2;
  std::uint64_t pool_seed = 0;
  Strategy strategy = Strategy::expected;
  double k = 4.0;
  double stop_threshold = 0.95;  // in (0.5, 1)
  std::size_t max_questions = 100;
};

/// Throws ServiceError(400) naming the invalid field. A missing pool seed is
/// drawn from `fallback_seed`.
SessionSpec parse_session_spec(const Json& body, std::uint64_t fallback_seed);
Json to_json(const SessionSpec& spec);

/// One elicitation session. All public methods serialize on the session mutex.
class Session {
 public:
  Session(std::string id, SessionSpec spec);

  const std::string& id() const { return id_; }

  /// {questionId, envIndex, questionNumber, lotteries:[{outcomes:[{loss, prob}]}...]}
  Json next_question();
  /// {posterior, stopped, mapEstimate, questionsAnswered}
  Json submit_answer(const std::string& question_id, int choice);
  Json snapshot() const;

  /// Posterior history (one vector per answered question), for replay checks.
  std::vector<std::vector<double>> posterior_history() const;

 private:
  bool stopped_locked() const;
  Json lottery_json(std::size_t env_index, std::size_t action) const;

  mutable std::mutex mu_;
  std::string id_;
  SessionSpec spec_;
  OnePeriodPool pool_;
  RegretBank bank_;
  GibbsState gibbs_;
  Rng design_rng_;
  std::size_t question_counter_ = 0;
  std::optional<std::size_t> pending_env_;
  std::string pending_id_;
  struct Answer {
    std::size_t env_index;
    int choice;
    std::vector<double> posterior;
  };
  std::vector<Answer> history_;
};

/// Registry of live sessions with an optional append-only journal per session.
class SessionManager {
 public:
  explicit SessionManager(std::optional<std::filesystem::path> journal_dir = std::nullopt,
                          std::uint64_t seed = 0);

  /// Returns the new session's id.
  std::string create(const Json& body);
  Json next_question(const std::string& id);
  Json submit_answer(const std::string& id, const Json& body);
  Json state(const std::string& id) const;

  /// Rebuilds sessions from every journal file in the journal directory.
  /// Returns the number of sessions restored.
  std::size_t replay_journal();

  std::size_t size() const;

 private:
  std::shared_ptr<Session> find(const std::string& id) const;
  std::string fresh_id();
  void journal(const std::string& id, const Json& record);

  mutable std::shared_mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::optional<std::filesystem::path> journal_dir_;
  std::mutex journal_mu_;
  std::mutex rng_mu_;
  Rng rng_;
};

/// Registers the JSON routes (with CORS) and, when `static_dir` is non-empty,
/// serves it at "/".
void mount_routes(httplib::Server& server, SessionManager& manager, const std::string& static_dir = "");

}  // namespace riskelicit
