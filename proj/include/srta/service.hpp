#pragma once
// Assessment service: accounts, session lifecycle, results and signed QR
// payloads behind a small JSON API (all routes under /v1, see docs/api.md).
//
// The router is transport-independent (Service::handle) so the HTTP binding
// in http_server.hpp is a thin adapter and tests can drive it directly.
//
// Persistence is event-sourced. data_dir/accounts.jsonl holds one account
// per line; data_dir/sessions/<id>.jsonl holds a session's event log. Each
// transition's events are appended and flushed before the response is
// produced, and a restarted service replays every log.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include <openssl/rand.h>

#include <nlohmann/json.hpp>

#include "srta/emotion.hpp"
#include "srta/error.hpp"
#include "srta/question_bank.hpp"
#include "srta/records.hpp"
#include "srta/rng.hpp"
#include "srta/scoring.hpp"
#include "srta/session.hpp"
#include "srta/signing.hpp"

namespace srta {

struct UserAccount {
    std::string username;
    std::string token;
    std::int64_t created_at = 0;
    LeadershipInputs inputs;
};

struct ServiceConfig {
    std::filesystem::path data_dir = "srta-data";
    SessionConfig session;
    LatencyModel latency;
};

struct ApiRequest {
    std::string method;
    std::string path;
    std::string body;
    std::string authorization;  // raw Authorization header
};

struct ApiResponse {
    int status = 200;
    std::string body;
    std::string content_type = "application/json";

    nlohmann::json json() const { return nlohmann::json::parse(body); }
};

inline int http_status(ErrorCode code) {
    switch (code) {
        case ErrorCode::NotFound: return 404;
        case ErrorCode::State:
        case ErrorCode::Conflict:
        case ErrorCode::Exhaustion: return 409;
        case ErrorCode::Parse:
        case ErrorCode::Validation:
        case ErrorCode::Domain:
        case ErrorCode::Clock:
        case ErrorCode::Shape:
        case ErrorCode::Empty:
        case ErrorCode::Integrity: return 422;
        case ErrorCode::Unauthorized: return 401;
        case ErrorCode::Forbidden: return 403;
        case ErrorCode::Capacity:
        case ErrorCode::Io: return 500;
    }
    return 500;
}

inline std::int64_t wall_clock_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

inline std::string random_hex(std::size_t bytes) {
    std::vector<unsigned char> b(bytes);
    if (RAND_bytes(b.data(), static_cast<int>(b.size())) != 1) fail(ErrorCode::Io, "RAND_bytes failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string s;
    for (unsigned char c : b) {
        s += hex[c >> 4];
        s += hex[c & 15];
    }
    return s;
}

inline nlohmann::json question_json(const Question& q) {
    return {{"id", q.id}, {"text", q.text}, {"type", q.qtype.code()}, {"major", q.major()}};
}

class Service {
public:
    using Clock = std::function<std::int64_t()>;

    Service(std::shared_ptr<const QuestionBank> bank, SigningKey key, ServiceConfig config = {},
            Clock clock = wall_clock_ms)
        : bank_(std::move(bank)), key_(std::move(key)), config_(std::move(config)), clock_(std::move(clock)) {
        if (!bank_) fail(ErrorCode::Validation, "service needs a question bank");
        std::filesystem::create_directories(config_.data_dir / "sessions");
        recover();
    }

    const SigningKey& signing_key() const { return key_; }
    const ServiceConfig& config() const { return config_; }

    ApiResponse handle(const ApiRequest& req) {
        try {
            return route(req);
        } catch (const Error& e) {
            return error_response(http_status(e.code()), e.code(), e.what());
        } catch (const nlohmann::json::exception& e) {
            return error_response(422, ErrorCode::Validation, std::string("bad request body: ") + e.what());
        }
    }

    // ---- typed operations (the router calls these)

    UserAccount create_user(const std::string& username, const LeadershipInputs& inputs) {
        if (username.empty() || username.size() > 64) fail(ErrorCode::Validation, "username must be 1-64 characters");
        require_valid(inputs);
        std::unique_lock lock(mutex_);
        if (accounts_.contains(username)) fail(ErrorCode::Conflict, "username '" + username + "' already exists");
        UserAccount a{username, random_hex(16), clock_(), inputs};
        append_line(config_.data_dir / "accounts.jsonl",
                    nlohmann::json{{"username", a.username},
                                   {"token", a.token},
                                   {"created_at", a.created_at},
                                   {"education_level", inputs.education_level},
                                   {"job_level", inputs.job_level}}
                            .dump() +
                        "\n");
        accounts_[username] = a;
        tokens_[a.token] = username;
        return a;
    }

    // Seed = FNV-1a(username, nonce); a random nonce is used when none is given.
    std::string start(const std::string& username, std::optional<std::string> nonce) {
        if (!nonce || nonce->empty()) nonce = random_hex(8);
        const std::uint64_t seed = session_seed(username, *nonce);
        const std::string id = session_id_for(seed);
        auto slot = std::make_shared<Slot>(Session(id, username, bank_, seed, config_.session));
        std::unique_lock lock(mutex_);
        if (sessions_.contains(id)) fail(ErrorCode::Conflict, "a session with this nonce already exists");
        write_events(id, {slot->session.start_event()}, /*truncate=*/true);
        sessions_[id] = slot;
        return id;
    }

    // Copy of a session's current state.
    Session snapshot(const std::string& id) const {
        auto slot = find(id);
        std::lock_guard lock(slot->mutex);
        return slot->session;
    }

    std::filesystem::path log_path(const std::string& id) const {
        return config_.data_dir / "sessions" / (id + ".jsonl");
    }

private:
    struct Slot {
        explicit Slot(Session s) : owner(s.username()), session(std::move(s)) {}
        const std::string owner;
        std::mutex mutex;
        Session session;
    };

    static std::string session_id_for(std::uint64_t seed) {
        static constexpr char hex[] = "0123456789abcdef";
        std::uint64_t v = mix64(seed);
        std::string s(16, '0');
        for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = hex[v & 15];
        return s;
    }

    static ApiResponse error_response(int status, ErrorCode code, const std::string& message) {
        return {status, nlohmann::json{{"error", {{"code", to_string(code)}, {"message", message}}}}.dump()};
    }

    static ApiResponse ok(const nlohmann::json& body, int status = 200) { return {status, body.dump()}; }

    static void append_line(const std::filesystem::path& path, const std::string& text, bool truncate = false) {
        std::ofstream out(path, truncate ? std::ios::trunc : std::ios::app);
        if (!out) fail(ErrorCode::Io, "cannot open " + path.string());
        out << text;
        out.flush();
        if (!out) fail(ErrorCode::Io, "write to " + path.string() + " failed");
    }

    void write_events(const std::string& id, const std::vector<SessionEvent>& events, bool truncate = false) {
        std::string text;
        for (const auto& e : events) text += e.dump() + "\n";
        append_line(log_path(id), text, truncate);
    }

    void recover() {
        std::ifstream acc(config_.data_dir / "accounts.jsonl");
        std::string line;
        while (std::getline(acc, line)) {
            if (line.empty()) continue;
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(line);
            } catch (const nlohmann::json::parse_error&) {
                continue;  // torn trailing write
            }
            UserAccount a{j.at("username").get<std::string>(), j.at("token").get<std::string>(),
                          j.at("created_at").get<std::int64_t>(),
                          {j.at("education_level").get<int>(), j.at("job_level").get<int>()}};
            tokens_[a.token] = a.username;
            accounts_[a.username] = a;
        }
        for (const auto& entry : std::filesystem::directory_iterator(config_.data_dir / "sessions")) {
            if (entry.path().extension() != ".jsonl") continue;
            auto log = read_log(entry.path());
            if (log.empty()) continue;
            Session s = replay_session(log, bank_, config_.session);
            const std::string id = s.session_id();
            sessions_[id] = std::make_shared<Slot>(std::move(s));
        }
    }

    // Complete lines only; a torn final line from a crash mid-write is dropped.
    static std::vector<SessionEvent> read_log(const std::filesystem::path& path) {
        std::ifstream in(path);
        std::vector<SessionEvent> out;
        std::string line;
        while (std::getline(in, line)) {
            if (in.eof()) {
                // last line without a newline terminator
                try {
                    out.push_back(nlohmann::json::parse(line));
                } catch (const nlohmann::json::parse_error&) {
                }
                break;
            }
            if (!line.empty()) out.push_back(nlohmann::json::parse(line));
        }
        return out;
    }

    std::shared_ptr<Slot> find(const std::string& id) const {
        std::shared_lock lock(mutex_);
        auto it = sessions_.find(id);
        if (it == sessions_.end()) fail(ErrorCode::NotFound, "unknown session '" + id + "'");
        return it->second;
    }

    const UserAccount& authenticate(const ApiRequest& req) const {
        static constexpr std::string_view prefix = "Bearer ";
        if (req.authorization.rfind(prefix, 0) != 0) fail(ErrorCode::Unauthorized, "missing bearer token");
        std::shared_lock lock(mutex_);
        auto it = tokens_.find(req.authorization.substr(prefix.size()));
        if (it == tokens_.end()) fail(ErrorCode::Unauthorized, "unknown token");
        return accounts_.at(it->second);
    }

    std::shared_ptr<Slot> owned(const ApiRequest& req, const std::string& id) const {
        const UserAccount& user = authenticate(req);
        auto slot = find(id);
        if (slot->owner != user.username)
            fail(ErrorCode::Forbidden, "session belongs to another user");
        return slot;
    }

    static nlohmann::json progress_json(const Session& s) {
        nlohmann::json j{{"session_id", s.session_id()},
                         {"state", to_string(s.state())},
                         {"answered", s.records().size()},
                         {"total", s.questionnaire().size()},
                         {"revalidations", s.revalidations()},
                         {"remaining_revalidations", s.remaining_revalidations()}};
        if (s.state() == SessionState::Active) {
            j["position"] = s.cursor() + 1;
            j["question"] = question_json(s.current_question());
        }
        return j;
    }

    nlohmann::json transition_json(const Session& s, const TransitionReport& r) const {
        nlohmann::json j = progress_json(s);
        if (r.record) j["record"] = *r.record;
        if (r.replacement) j["replacement"] = question_json(*r.replacement);
        return j;
    }

    ResultBundle result_of(const Session& s) const {
        std::shared_lock lock(mutex_);
        const auto& inputs = accounts_.at(s.username()).inputs;
        lock.unlock();
        return compute_result(s, inputs, config_.latency);
    }

    static nlohmann::json parse_body(const ApiRequest& req) {
        if (req.body.empty()) return nlohmann::json::object();
        try {
            auto j = nlohmann::json::parse(req.body);
            if (!j.is_object()) fail(ErrorCode::Validation, "request body must be a JSON object");
            return j;
        } catch (const nlohmann::json::parse_error& e) {
            fail(ErrorCode::Validation, std::string("request body is not JSON: ") + e.what());
        }
    }

    static EmotionSample emotion_of(const nlohmann::json& body) {
        if (body.contains("emotion_timeline")) return aggregate_window(parse_timeline(body.at("emotion_timeline")));
        if (body.contains("emotion")) {
            EmotionSample e = body.at("emotion").get<EmotionSample>();
            require_valid(e);
            return e;
        }
        fail(ErrorCode::Validation, "answer needs an emotion sample or an emotion_timeline");
    }

    ApiResponse route(const ApiRequest& req) {
        std::vector<std::string> parts;
        {
            std::string_view p = req.path;
            if (auto q = p.find('?'); q != std::string_view::npos) p = p.substr(0, q);
            std::size_t i = 0;
            while (i < p.size()) {
                while (i < p.size() && p[i] == '/') ++i;
                const std::size_t j = p.find('/', i);
                const std::size_t end = j == std::string_view::npos ? p.size() : j;
                if (end > i) parts.emplace_back(p.substr(i, end - i));
                i = end;
            }
        }
        if (parts.empty() || parts[0] != "v1") fail(ErrorCode::NotFound, "no route for " + req.path);
        const std::string& m = req.method;
        const std::size_t n = parts.size();

        if (n == 2 && parts[1] == "users" && m == "POST") {
            const auto body = parse_body(req);
            const UserAccount a = create_user(body.at("username").get<std::string>(),
                                              {body.value("education_level", 1), body.value("job_level", 1)});
            return ok({{"username", a.username}, {"token", a.token}, {"created_at", a.created_at},
                       {"education_level", a.inputs.education_level}, {"job_level", a.inputs.job_level}},
                      201);
        }
        if (n == 2 && parts[1] == "sessions" && m == "POST") {
            const UserAccount& user = authenticate(req);
            const auto body = parse_body(req);
            std::optional<std::string> nonce;
            if (body.contains("nonce")) nonce = body.at("nonce").get<std::string>();
            const std::string id = start(user.username, nonce);
            return ok(progress_json(snapshot(id)), 201);
        }
        if (n == 3 && parts[1] == "qr" && parts[2] == "verify" && m == "POST") {
            const auto body = parse_body(req);
            const SignedResultPayload p = verify_result(body.at("payload").get<std::string>(), key_);
            return ok({{"valid", true}, {"key_id", p.key_id}, {"issued_at", p.issued_at}, {"result", p.result}});
        }
        if (n >= 3 && parts[1] == "sessions") {
            const std::string& id = parts[2];
            auto slot = owned(req, id);
            std::lock_guard lock(slot->mutex);
            Session& s = slot->session;
            const std::string action = n == 4 ? parts[3] : "";
            if (n == 3 && m == "GET") return ok(progress_json(s));
            if (action == "question" && m == "GET") {
                s.current_question();  // state check
                return ok(progress_json(s));
            }
            if (action == "answer" && m == "POST") {
                const auto body = parse_body(req);
                const AnswerValue answer = parse_answer(body.at("answer").get<std::string>());
                const auto displayed = body.at("displayed_at").get<std::int64_t>();
                const auto answered = body.at("answered_at").get<std::int64_t>();
                const EmotionSample emotion = emotion_of(body);
                Session next = s;  // mutate a copy; commit only once the log write succeeded
                const TransitionReport r = next.submit_answer(answer, displayed, answered, emotion);
                write_events(id, r.events);
                s = std::move(next);
                return ok(transition_json(s, r));
            }
            if (action == "skip" && m == "POST") {
                Session next = s;
                const TransitionReport r = next.skip_question();
                write_events(id, r.events);
                s = std::move(next);
                return ok(transition_json(s, r));
            }
            if (action == "result" && m == "GET") return ok(nlohmann::json(result_of(s)));
            if (action == "qr" && m == "GET") {
                const std::string token = sign_result(result_of(s), clock_(), key_);
                return {200, token, "text/plain"};
            }
        }
        fail(ErrorCode::NotFound, "no route for " + m + " " + req.path);
    }

    std::shared_ptr<const QuestionBank> bank_;
    SigningKey key_;
    ServiceConfig config_;
    Clock clock_;

    mutable std::shared_mutex mutex_;  // guards the three maps below
    std::map<std::string, UserAccount> accounts_;
    std::map<std::string, std::string> tokens_;
    std::map<std::string, std::shared_ptr<Slot>> sessions_;
};

}  // namespace srta
