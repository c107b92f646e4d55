#include "riskelicit/service.hpp"

#include <httplib.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "riskelicit/errors.hpp"
#include "riskelicit/experiments.hpp"

namespace riskelicit {

namespace {

[[noreturn]] void bad_request(const std::string& code, const std::string& message) {
  throw ServiceError(400, code, message);
}

template <class T>
T get_or(const Json& j, const char* name, T fallback) {
  if (!j.contains(name)) return fallback;
  try {
    return j.at(name).get<T>();
  } catch (const Json::exception&) {
    bad_request("bad_request", std::string("field '") + name + "' has the wrong type");
  }
}

std::string label_for(double kappa, double gamma) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "kappa=%g gamma=%g", kappa, gamma);
  return buf;
}

double round3(double p) { return std::round(p * 1000.0) / 1000.0; }

std::string hex_id(Rng& rng) {
  char buf[33];
  std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(rng.next_u64()),
                static_cast<unsigned long long>(rng.next_u64()));
  return buf;
}

std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

}  // namespace

SessionSpec parse_session_spec(const Json& body, std::uint64_t fallback_seed) {
  if (!body.is_object()) bad_request("bad_request", "request body must be a JSON object");
  SessionSpec spec;
  spec.loss_levels = get_or<std::vector<double>>(body, "lossLevels", {0.0, 0.5, 1.0});
  for (std::size_t i = 1; i < spec.loss_levels.size(); ++i) {
    if (!(spec.loss_levels[i] > spec.loss_levels[i - 1])) {
      bad_request("invalid_loss_levels", "lossLevels must be strictly increasing");
    }
  }
  CostFunction cost({0.0, 1.0});
  try {
    cost = CostFunction(spec.loss_levels);
  } catch (const DomainError& e) {
    bad_request("invalid_loss_levels", std::string("lossLevels: ") + e.what());
  }

  auto add = [&](const Json& c, std::size_t idx) {
    if (!c.is_object()) bad_request("invalid_candidate", "candidate " + std::to_string(idx) + " must be an object");
    try {
      if (c.contains("cost") && cost_from_json(c.at("cost")) != cost) {
        bad_request("non_canonical_cost", "candidate " + std::to_string(idx) + " cost must equal lossLevels");
      }
      std::string label = c.contains("label") ? c.at("label").get<std::string>() : "";
      if (c.contains("spectrum")) {
        spec.candidates.push_back({cost, spectrum_from_json(c.at("spectrum"))});
        if (label.empty()) label = "candidate " + std::to_string(idx);
      } else {
        const double kappa = c.at("kappa").get<double>();
        const double gamma = c.at("gamma").get<double>();
        spec.candidates.push_back({cost, family_spectrum(kappa, gamma)});
        if (label.empty()) label = label_for(kappa, gamma);
      }
      spec.labels.push_back(label);
    } catch (const ServiceError&) {
      throw;
    } catch (const std::exception& e) {
      bad_request("invalid_candidate", "candidate " + std::to_string(idx) + ": " + e.what());
    }
  };

  if (body.contains("candidates")) {
    const Json& list = body.at("candidates");
    if (!list.is_array()) bad_request("bad_request", "candidates must be an array");
    for (std::size_t i = 0; i < list.size(); ++i) add(list[i], i);
  } else if (body.contains("grid")) {
    const auto kappas = get_or<std::vector<double>>(body.at("grid"), "kappa", {});
    const auto gammas = get_or<std::vector<double>>(body.at("grid"), "gamma", {});
    for (double kappa : kappas) {
      for (double gamma : gammas) add(Json{{"kappa", kappa}, {"gamma", gamma}}, spec.candidates.size());
    }
  }
  if (spec.candidates.empty()) bad_request("invalid_candidate", "at least one candidate is required");
  try {
    validate_candidates(spec.candidates);
  } catch (const DomainError& e) {
    bad_request("invalid_candidate", e.what());
  }

  const Json pool = body.contains("pool") ? body.at("pool") : Json::object();
  spec.pool_size = get_or<std::size_t>(pool, "size", spec.pool_size);
  spec.num_actions = get_or<std::size_t>(pool, "numActions", spec.num_actions);
  spec.pool_seed = get_or<std::uint64_t>(pool, "seed", fallback_seed);
  if (spec.pool_size == 0 || spec.pool_size > 100000) bad_request("bad_request", "pool.size must be in [1, 100000]");
  if (spec.num_actions != 2) bad_request("bad_request", "questions compare exactly two lotteries");

  try {
    spec.strategy = parse_strategy(get_or<std::string>(body, "strategy", "expected"));
  } catch (const ConfigError& e) {
    bad_request("bad_request", e.what());
  }
  spec.k = get_or<double>(body, "k", spec.k);
  if (!(spec.k > 0.0) || !std::isfinite(spec.k)) bad_request("bad_request", "k must be positive");
  spec.stop_threshold = get_or<double>(body, "stopThreshold", spec.stop_threshold);
  if (!(spec.stop_threshold > 0.5 && spec.stop_threshold < 1.0)) {
    bad_request("invalid_threshold", "stopThreshold must lie strictly between 0.5 and 1");
  }
  spec.max_questions = get_or<std::size_t>(body, "maxQuestions", spec.max_questions);
  if (spec.max_questions == 0) bad_request("bad_request", "maxQuestions must be positive");
  return spec;
}

Json to_json(const SessionSpec& spec) {
  Json cands = Json::array();
  for (std::size_t i = 0; i < spec.candidates.size(); ++i) {
    cands.push_back({{"spectrum", to_json(spec.candidates[i].spectrum)}, {"label", spec.labels[i]}});
  }
  return {{"lossLevels", spec.loss_levels},
          {"candidates", cands},
          {"pool", {{"size", spec.pool_size}, {"numActions", spec.num_actions}, {"seed", spec.pool_seed}}},
          {"strategy", std::string(to_string(spec.strategy))},
          {"k", spec.k},
          {"stopThreshold", spec.stop_threshold},
          {"maxQuestions", spec.max_questions}};
}

// ---------------------------------------------------------------------------
// Session

Session::Session(std::string id, SessionSpec spec)
    : id_(std::move(id)),
      spec_(std::move(spec)),
      pool_(build_one_period_pool(spec_.pool_seed, spec_.pool_size, spec_.loss_levels.size(), spec_.num_actions)),
      bank_(RegretBank::build(pool_, spec_.candidates)),
      gibbs_(spec_.candidates.size(), spec_.k),
      design_rng_(Rng(spec_.pool_seed).split(1)) {}

bool Session::stopped_locked() const {
  if (gibbs_.size() == 1) return true;
  if (history_.size() >= spec_.max_questions) return true;
  const auto probs = gibbs_.probs();
  return *std::max_element(probs.begin(), probs.end()) >= spec_.stop_threshold;
}

Json Session::lottery_json(std::size_t env_index, std::size_t action) const {
  Json outcomes = Json::array();
  const auto col = pool_[env_index].column(action);
  for (std::size_t x = 0; x < col.size(); ++x) {
    outcomes.push_back({{"loss", spec_.loss_levels[x]}, {"prob", round3(col[x])}});
  }
  return {{"outcomes", outcomes}};
}

Json Session::next_question() {
  std::lock_guard lock(mu_);
  if (stopped_locked()) throw ServiceError(410, "gone", "session has stopped; no further questions");
  if (pending_env_) throw ServiceError(409, "conflict", "question " + pending_id_ + " is still awaiting an answer");
  const std::size_t env = design_next(bank_, gibbs_, spec_.strategy, design_rng_);
  pending_env_ = env;
  pending_id_ = "q" + std::to_string(++question_counter_);
  return {{"questionId", pending_id_},
          {"envIndex", env},
          {"questionNumber", history_.size() + 1},
          {"lotteries", Json::array({lottery_json(env, 0), lottery_json(env, 1)})}};
}

Json Session::submit_answer(const std::string& question_id, int choice) {
  std::lock_guard lock(mu_);
  if (!pending_env_) {
    if (stopped_locked()) throw ServiceError(410, "gone", "session has stopped");
    throw ServiceError(409, "conflict", "no question is pending");
  }
  if (question_id != pending_id_) {
    throw ServiceError(409, "stale_question", "question " + question_id + " is not the pending question");
  }
  if (choice != 1 && choice != 2) throw ServiceError(400, "invalid_choice", "choice must be 1 or 2");
  const std::size_t env = *pending_env_;
  const std::size_t response[] = {static_cast<std::size_t>(choice - 1)};
  std::vector<double> regrets(gibbs_.size());
  for (std::size_t c = 0; c < regrets.size(); ++c) regrets[c] = bank_.view(env, c).response_regret(response);
  gibbs_ = gibbs_.update(regrets);
  history_.push_back({env, choice, std::vector<double>(gibbs_.probs().begin(), gibbs_.probs().end())});
  pending_env_.reset();
  pending_id_.clear();
  return {{"posterior", history_.back().posterior},
          {"stopped", stopped_locked()},
          {"mapEstimate", gibbs_.map_estimate()},
          {"questionsAnswered", history_.size()},
          {"envIndex", env}};
}

Json Session::snapshot() const {
  std::lock_guard lock(mu_);
  Json history = Json::array();
  for (const auto& a : history_) {
    history.push_back({{"envIndex", a.env_index}, {"choice", a.choice}, {"posterior", a.posterior}});
  }
  Json pending = nullptr;
  if (pending_env_) {
    pending = {{"questionId", pending_id_},
               {"envIndex", *pending_env_},
               {"questionNumber", history_.size() + 1},
               {"lotteries", Json::array({lottery_json(*pending_env_, 0), lottery_json(*pending_env_, 1)})}};
  }
  return {{"id", id_},
          {"labels", spec_.labels},
          {"lossLevels", spec_.loss_levels},
          {"strategy", std::string(to_string(spec_.strategy))},
          {"k", spec_.k},
          {"stopThreshold", spec_.stop_threshold},
          {"maxQuestions", spec_.max_questions},
          {"poolSize", spec_.pool_size},
          {"posterior", std::vector<double>(gibbs_.probs().begin(), gibbs_.probs().end())},
          {"mapEstimate", gibbs_.map_estimate()},
          {"stopped", stopped_locked()},
          {"pendingQuestion", pending},
          {"history", history}};
}

std::vector<std::vector<double>> Session::posterior_history() const {
  std::lock_guard lock(mu_);
  std::vector<std::vector<double>> out;
  for (const auto& a : history_) out.push_back(a.posterior);
  return out;
}

// ---------------------------------------------------------------------------
// SessionManager

SessionManager::SessionManager(std::optional<std::filesystem::path> journal_dir, std::uint64_t seed)
    : journal_dir_(std::move(journal_dir)), rng_(seed != 0 ? seed : std::random_device{}() * 0x100000001ULL ^ now_ms()) {
  if (journal_dir_) std::filesystem::create_directories(*journal_dir_);
}

std::string SessionManager::fresh_id() {
  std::lock_guard lock(rng_mu_);
  return hex_id(rng_);
}

std::string SessionManager::create(const Json& body) {
  std::uint64_t fallback;
  {
    std::lock_guard lock(rng_mu_);
    fallback = rng_.next_u64();
  }
  SessionSpec spec = parse_session_spec(body, fallback);
  const std::string id = fresh_id();
  const Json record = {{"type", "create"}, {"spec", to_json(spec)}, {"timestamp", now_ms()}};
  auto session = std::make_shared<Session>(id, std::move(spec));
  {
    std::unique_lock lock(mu_);
    sessions_.emplace(id, std::move(session));
  }
  journal(id, record);
  return id;
}

std::shared_ptr<Session> SessionManager::find(const std::string& id) const {
  std::shared_lock lock(mu_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw ServiceError(404, "not_found", "no session with id " + id);
  return it->second;
}

Json SessionManager::next_question(const std::string& id) { return find(id)->next_question(); }

Json SessionManager::submit_answer(const std::string& id, const Json& body) {
  if (!body.is_object() || !body.contains("questionId") || !body.contains("choice")) {
    bad_request("bad_request", "body must be {\"questionId\":..., \"choice\":1|2}");
  }
  std::string qid;
  int choice = 0;
  try {
    qid = body.at("questionId").is_string() ? body.at("questionId").get<std::string>()
                                            : body.at("questionId").dump();
    if (!body.at("choice").is_number_integer()) throw ServiceError(400, "invalid_choice", "choice must be 1 or 2");
    choice = body.at("choice").get<int>();
  } catch (const Json::exception&) {
    throw ServiceError(400, "invalid_choice", "choice must be 1 or 2");
  }
  Json out = find(id)->submit_answer(qid, choice);
  journal(id, {{"type", "answer"},
               {"questionId", qid},
               {"envIndex", out.at("envIndex")},
               {"choice", choice},
               {"timestamp", now_ms()}});
  return out;
}

Json SessionManager::state(const std::string& id) const { return find(id)->snapshot(); }

std::size_t SessionManager::size() const {
  std::shared_lock lock(mu_);
  return sessions_.size();
}

void SessionManager::journal(const std::string& id, const Json& record) {
  if (!journal_dir_) return;
  std::lock_guard lock(journal_mu_);
  std::ofstream out(*journal_dir_ / (id + ".jsonl"), std::ios::app);
  out << record.dump() << '\n';
}

std::size_t SessionManager::replay_journal() {
  if (!journal_dir_) return 0;
  std::size_t restored = 0;
  for (const auto& entry : std::filesystem::directory_iterator(*journal_dir_)) {
    if (entry.path().extension() != ".jsonl") continue;
    const std::string id = entry.path().stem().string();
    std::ifstream in(entry.path());
    std::string line;
    std::shared_ptr<Session> session;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const Json rec = Json::parse(line, nullptr, false);
      if (rec.is_discarded()) break;  // torn final line after a crash
      if (rec.value("type", "") == "create") {
        session = std::make_shared<Session>(id, parse_session_spec(rec.at("spec"), 0));
      } else if (session && rec.value("type", "") == "answer") {
        const Json q = session->next_question();
        if (q.at("envIndex") != rec.at("envIndex")) {
          throw ContractError("journal for session " + id + " diverges from the replayed design");
        }
        session->submit_answer(q.at("questionId").get<std::string>(), rec.at("choice").get<int>());
      }
    }
    if (session) {
      std::unique_lock lock(mu_);
      sessions_[id] = session;
      ++restored;
    }
  }
  return restored;
}

// ---------------------------------------------------------------------------
// HTTP

namespace {

void send_json(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
  send_json(res, status, {{"error", {{"code", code}, {"message", message}}}});
}

template <class F>
void handle(httplib::Response& res, F&& f) {
  try {
    f();
  } catch (const ServiceError& e) {
    send_error(res, e.status(), e.code(), e.what());
  } catch (const std::exception& e) {
    send_error(res, 500, "internal", e.what());
  }
}

Json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return Json::object();
  Json j = Json::parse(req.body, nullptr, false);
  if (j.is_discarded()) bad_request("bad_request", "request body is not valid JSON");
  return j;
}

}  // namespace

void mount_routes(httplib::Server& server, SessionManager& manager, const std::string& static_dir) {
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                              {"Access-Control-Allow-Headers", "Content-Type"}});
  server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  server.Post("/sessions", [&manager](const httplib::Request& req, httplib::Response& res) {
    handle(res, [&] {
      const std::string id = manager.create(parse_body(req));
      send_json(res, 201, {{"id", id}, {"state", manager.state(id)}});
    });
  });
  server.Get(R"(/sessions/([^/]+)/question)", [&manager](const httplib::Request& req, httplib::Response& res) {
    handle(res, [&] { send_json(res, 200, manager.next_question(req.matches[1])); });
  });
  server.Post(R"(/sessions/([^/]+)/answer)", [&manager](const httplib::Request& req, httplib::Response& res) {
    handle(res, [&] { send_json(res, 200, manager.submit_answer(req.matches[1], parse_body(req))); });
  });
  server.Get(R"(/sessions/([^/]+))", [&manager](const httplib::Request& req, httplib::Response& res) {
    handle(res, [&] { send_json(res, 200, manager.state(req.matches[1])); });
  });
  if (!static_dir.empty()) server.set_mount_point("/", static_dir);
}

}  // namespace riskelicit
