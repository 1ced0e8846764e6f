#pragma once
// One assessment run as a state machine.
//
//   Active --(last pending question answered)--> Completed
//   Active --(revalidation count exceeds the budget)--> Invalid
//
// A skip replaces the current question in place with a fresh one of the
// same type and records nothing. An answer whose emotion is disqualified
// is kept (flagged) and a same-type question is appended to the end of the
// questionnaire. Both count against the same revalidation budget.
//
// Every transition emits events; replaying the event log through
// replay_session() rebuilds the session exactly.

#include <cstdint>
#include <deque>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "srta/error.hpp"
#include "srta/question_bank.hpp"
#include "srta/records.hpp"
#include "srta/rng.hpp"

namespace srta {

enum class SessionState { Active, Completed, Invalid };

inline std::string_view to_string(SessionState s) {
    switch (s) {
        case SessionState::Active: return "Active";
        case SessionState::Completed: return "Completed";
        case SessionState::Invalid: return "Invalid";
    }
    return "?";
}

struct SessionConfig {
    int max_revalidations = kMaxRevalidations;
    // Records whose emotion confidence falls strictly below this are disqualified.
    double disqualify_below = 0.5;
};

inline bool is_emotion_disqualified(const EmotionSample& e, double threshold = 0.5) {
    return e.confidence < threshold;
}

inline double average_latency_ms(const std::vector<AnswerRecord>& records) {
    if (records.empty()) fail(ErrorCode::Empty, "average latency needs at least one answer");
    double sum = 0.0;
    for (const auto& r : records) sum += static_cast<double>(r.latency_ms);
    return sum / static_cast<double>(records.size());
}

using SessionEvent = nlohmann::json;

struct TransitionReport {
    std::vector<SessionEvent> events;
    SessionState state = SessionState::Active;
    int revalidations = 0;
    std::optional<AnswerRecord> record;
    std::optional<Question> replacement;
};

class Session {
public:
    Session(std::string session_id, std::string username, std::shared_ptr<const QuestionBank> bank,
            std::uint64_t seed, SessionConfig config = {})
        : session_id_(std::move(session_id)),
          username_(std::move(username)),
          bank_(std::move(bank)),
          seed_(seed),
          config_(config) {
        if (!bank_) fail(ErrorCode::Validation, "session needs a question bank");
        questionnaire_ = select_questionnaire(*bank_, seed_);
        for (const auto& q : questionnaire_) used_ids_.insert(q.id);
    }

    const std::string& session_id() const { return session_id_; }
    const std::string& username() const { return username_; }
    std::uint64_t seed() const { return seed_; }
    const SessionConfig& config() const { return config_; }
    const std::vector<Question>& questionnaire() const { return questionnaire_; }
    std::size_t cursor() const { return cursor_; }
    const std::vector<AnswerRecord>& records() const { return records_; }
    int revalidations() const { return revalidations_; }
    SessionState state() const { return state_; }
    std::size_t pending() const { return questionnaire_.size() - cursor_; }
    int remaining_revalidations() const { return std::max(0, config_.max_revalidations - revalidations_); }

    // The first 30 records, one per standard questionnaire slot.
    std::vector<AnswerRecord> standard_records() const {
        const auto n = std::min(records_.size(), kQuestionnaireLength);
        return {records_.begin(), records_.begin() + static_cast<std::ptrdiff_t>(n)};
    }

    SessionEvent start_event() const {
        nlohmann::json ids = nlohmann::json::array();
        for (const auto& q : questionnaire_) ids.push_back(q.id);
        return {{"event", "start"}, {"session_id", session_id_}, {"username", username_},
                {"seed", seed_}, {"questions", ids}};
    }

    const Question& current_question() const {
        require_active("current_question");
        return questionnaire_[cursor_];
    }

    TransitionReport submit_answer(AnswerValue answer, std::int64_t displayed_at, std::int64_t answered_at,
                                   const EmotionSample& emotion) {
        require_active("submit_answer");
        if (answered_at < displayed_at)
            fail(ErrorCode::Clock, "answered_at precedes displayed_at");
        require_valid(emotion);

        TransitionReport report;
        report.events.push_back({{"event", "answer"}, {"answer", to_string(answer)},
                                 {"displayed_at", displayed_at}, {"answered_at", answered_at},
                                 {"emotion", emotion}});

        const Question& q = questionnaire_[cursor_];
        const bool flagged = is_emotion_disqualified(emotion, config_.disqualify_below);
        AnswerRecord rec = make_record(q.id, q.qtype, answer, answered_at - displayed_at, emotion, flagged);
        records_.push_back(rec);
        report.record = rec;

        if (flagged) {
            ++revalidations_;
            SessionEvent ev{{"event", "disqualify"}, {"question_id", q.id}};
            if (revalidations_ > config_.max_revalidations) {
                report.events.push_back(ev);
                ++cursor_;
                invalidate(report);
                return report;
            }
            Question extra = draw_fresh(q.qtype);
            ev["replacement"] = extra.id;
            report.events.push_back(ev);
            used_ids_.insert(extra.id);
            questionnaire_.push_back(extra);
            report.replacement = extra;
        }

        ++cursor_;
        if (cursor_ == questionnaire_.size()) {
            state_ = SessionState::Completed;
            report.events.push_back({{"event", "complete"}});
        }
        finish(report);
        return report;
    }

    TransitionReport skip_question() {
        require_active("skip_question");
        TransitionReport report;
        const Question& q = questionnaire_[cursor_];
        if (revalidations_ + 1 > config_.max_revalidations) {
            ++revalidations_;
            report.events.push_back({{"event", "skip"}, {"question_id", q.id}});
            invalidate(report);
            return report;
        }
        // Draw before mutating so an exhausted bank leaves the session untouched.
        Question fresh = draw_fresh(q.qtype, revalidations_ + 1);
        ++revalidations_;
        report.events.push_back({{"event", "skip"}, {"question_id", q.id}, {"replacement", fresh.id}});
        retired_.push_back(q.id);
        used_ids_.insert(fresh.id);
        questionnaire_[cursor_] = fresh;
        report.replacement = fresh;
        finish(report);
        return report;
    }

    double average_latency() const { return average_latency_ms(records_); }

    friend bool operator==(const Session& a, const Session& b) {
        return a.session_id_ == b.session_id_ && a.username_ == b.username_ && a.seed_ == b.seed_ &&
               a.questionnaire_ == b.questionnaire_ && a.cursor_ == b.cursor_ && a.records_ == b.records_ &&
               a.revalidations_ == b.revalidations_ && a.state_ == b.state_ && a.retired_ == b.retired_ &&
               a.used_ids_ == b.used_ids_;
    }

private:
    void require_active(const char* op) const {
        if (state_ != SessionState::Active)
            fail(ErrorCode::State, std::string(op) + ": session " + session_id_ + " is " +
                                       std::string(to_string(state_)));
    }

    // The generator for the n-th revalidation draw depends only on the session
    // seed and n, so replay reproduces every draw.
    Question draw_fresh(QuestionType t, int nth = -1) const {
        if (nth < 0) nth = revalidations_;
        Rng rng(derive_seed(seed_, 0x7265766100000000ULL + static_cast<std::uint64_t>(nth)));
        return draw_revalidation(*bank_, t, used_ids_, rng);
    }

    void invalidate(TransitionReport& report) {
        state_ = SessionState::Invalid;
        report.events.push_back({{"event", "invalidate"}, {"revalidations", revalidations_}});
        finish(report);
    }

    void finish(TransitionReport& report) const {
        report.state = state_;
        report.revalidations = revalidations_;
    }

    std::string session_id_;
    std::string username_;
    std::shared_ptr<const QuestionBank> bank_;
    std::uint64_t seed_ = 0;
    SessionConfig config_;
    std::vector<Question> questionnaire_;
    std::size_t cursor_ = 0;
    std::vector<AnswerRecord> records_;
    int revalidations_ = 0;
    SessionState state_ = SessionState::Active;
    std::vector<std::string> retired_;
    std::unordered_set<std::string> used_ids_;
};

inline Session start_session(std::string session_id, std::string username,
                             std::shared_ptr<const QuestionBank> bank, std::uint64_t seed,
                             SessionConfig config = {}) {
    return Session(std::move(session_id), std::move(username), std::move(bank), seed, config);
}

// Rebuilds a session from its event log. Command events (start, answer,
// skip) are re-executed; derived events (disqualify, complete, invalidate)
// and recorded replacement ids are checked against what re-execution
// produces. A log truncated after any line replays to the state the live
// session had at that point.
inline Session replay_session(const std::vector<SessionEvent>& log, std::shared_ptr<const QuestionBank> bank,
                              SessionConfig config = {}) {
    if (log.empty() || log.front().value("event", "") != "start")
        fail(ErrorCode::Integrity, "event log must begin with a start event");
    const auto& head = log.front();
    Session s(head.at("session_id").get<std::string>(), head.at("username").get<std::string>(), std::move(bank),
              head.at("seed").get<std::uint64_t>(), config);
    if (s.start_event() != head)
        fail(ErrorCode::Integrity, "start event does not match the questionnaire the bank produces");

    std::deque<SessionEvent> expected;
    auto check = [&](const SessionEvent& got, std::size_t line) {
        if (got != log[line])
            fail(ErrorCode::Integrity, "event log line " + std::to_string(line + 1) + " diverges on replay");
    };
    for (std::size_t i = 1; i < log.size(); ++i) {
        const auto& ev = log[i];
        const std::string kind = ev.value("event", "");
        if (kind == "answer" || kind == "skip") {
            if (!expected.empty())
                fail(ErrorCode::Integrity, "event log line " + std::to_string(i + 1) + ": missing derived events");
            TransitionReport r = kind == "answer"
                                     ? s.submit_answer(parse_answer(ev.at("answer").get<std::string>()),
                                                       ev.at("displayed_at").get<std::int64_t>(),
                                                       ev.at("answered_at").get<std::int64_t>(),
                                                       ev.at("emotion").get<EmotionSample>())
                                     : s.skip_question();
            check(r.events.front(), i);
            expected.assign(r.events.begin() + 1, r.events.end());
        } else if (kind == "disqualify" || kind == "complete" || kind == "invalidate") {
            if (expected.empty())
                fail(ErrorCode::Integrity, "event log line " + std::to_string(i + 1) + ": unexpected " + kind);
            check(expected.front(), i);
            expected.pop_front();
        } else {
            fail(ErrorCode::Integrity, "event log line " + std::to_string(i + 1) + ": unknown event '" + kind + "'");
        }
    }
    return s;
}

}  // namespace srta
