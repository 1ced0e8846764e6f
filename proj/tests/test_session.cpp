#include "catch_amalgamated.hpp"

#include <memory>
#include <set>

#include "srta/session.hpp"

using namespace srta;

namespace {

std::shared_ptr<const QuestionBank> bank() {
    static auto b = std::make_shared<const QuestionBank>(make_synthetic_bank(40));
    return b;
}

const EmotionSample kCalm{0.1, 0.2, 0.9};
const EmotionSample kShaky{0.1, 0.2, 0.4};

Session fresh(std::uint64_t seed = 11) { return start_session("s1", "alice", bank(), seed); }

// Answers every pending question Yes with a 3 s latency; collects the log.
void answer_all(Session& s, std::vector<SessionEvent>& log, EmotionSample e = kCalm) {
    std::int64_t t = 0;
    while (s.state() == SessionState::Active) {
        auto r = s.submit_answer(AnswerValue::Yes, t, t + 3000, e);
        log.insert(log.end(), r.events.begin(), r.events.end());
        t += 4000;
    }
}

template <typename F>
ErrorCode error_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an srta::Error");
    return ErrorCode::Io;
}

}  // namespace

TEST_CASE("start_session", "[session]") {
    const Session s = fresh();
    CHECK(s.state() == SessionState::Active);
    CHECK(s.cursor() == 0);
    CHECK(s.pending() == 30);
    CHECK(s.records().empty());
    CHECK(s.revalidations() == 0);

    SECTION("different nonces give different questionnaires") {
        const Session a = start_session("a", "alice", bank(), session_seed("alice", "nonce-1"));
        const Session b = start_session("b", "alice", bank(), session_seed("alice", "nonce-2"));
        CHECK(a.questionnaire() != b.questionnaire());
    }
    SECTION("a bank short of one type cannot exist, so no session starts") {
        std::vector<Question> qs = make_synthetic_bank(40).questions();
        std::erase_if(qs, [](const Question& q) { return q.qtype == QuestionType::Kind::NS_HA; });
        CHECK(error_of([&] { start_session("x", "u", std::make_shared<QuestionBank>(qs), 1); }) ==
              ErrorCode::Capacity);
    }
}

TEST_CASE("current_question", "[session]") {
    Session s = fresh();
    CHECK(s.current_question() == s.questionnaire()[0]);
    s.submit_answer(AnswerValue::No, 0, 1000, kCalm);
    CHECK(s.current_question() == s.questionnaire()[1]);
    std::vector<SessionEvent> log;
    answer_all(s, log);
    CHECK(error_of([&] { s.current_question(); }) == ErrorCode::State);
}

TEST_CASE("granted dimension for all 12 (type, answer) pairs", "[session]") {
    for (auto k : QuestionType::all()) {
        const QuestionType t(k);
        CHECK(granted_dimension(t, AnswerValue::Yes) == t.first());
        CHECK(granted_dimension(t, AnswerValue::No) == t.second());
    }
    CHECK(granted_dimension(QuestionType::Kind::HA_NS, AnswerValue::Yes) == Dimension::HA);
    CHECK(granted_dimension(QuestionType::Kind::RD_HA, AnswerValue::No) == Dimension::HA);
}

TEST_CASE("submit_answer records latency and granted dimension", "[session]") {
    Session s = fresh();
    const Question q = s.current_question();
    auto r = s.submit_answer(AnswerValue::Yes, 5000, 5000, kCalm);
    REQUIRE(r.record);
    CHECK(r.record->latency_ms == 200);
    CHECK(r.record->granted == q.qtype.first());
    CHECK(r.record->question_id == q.id);
    CHECK(s.cursor() == 1);

    auto r2 = s.submit_answer(AnswerValue::No, 0, 60000, kCalm);
    CHECK(r2.record->latency_ms == 10000);

    CHECK(error_of([&] { s.submit_answer(AnswerValue::No, 10, 5, kCalm); }) == ErrorCode::Clock);
    CHECK(error_of([&] { s.submit_answer(AnswerValue::No, 0, 5, {2.0, 0.0, 1.0}); }) == ErrorCode::Validation);
    CHECK(s.cursor() == 2);
}

TEST_CASE("latency clamp holds for arbitrary intervals (property)", "[session][property]") {
    Rng rng(99);
    for (int i = 0; i < 2000; ++i) {
        const auto d = static_cast<std::int64_t>(rng.below(50000));
        const auto l = clamp_latency(d);
        REQUIRE(l >= 200);
        REQUIRE(l <= 10000);
        if (d >= 200 && d <= 10000) REQUIRE(l == d);
    }
}

TEST_CASE("is_emotion_disqualified uses a strict 0.5 threshold", "[session]") {
    CHECK_FALSE(is_emotion_disqualified({0, 0, 0.9}));
    CHECK(is_emotion_disqualified({0, 0, 0.4}));
    CHECK_FALSE(is_emotion_disqualified({0, 0, 0.5}));
}

TEST_CASE("skip replaces in place", "[session]") {
    Session s = fresh();
    s.submit_answer(AnswerValue::Yes, 0, 3000, kCalm);
    const Question before = s.current_question();
    auto r = s.skip_question();
    CHECK(s.revalidations() == 1);
    CHECK(s.records().size() == 1);
    CHECK(s.cursor() == 1);
    CHECK(s.pending() == 29);
    REQUIRE(r.replacement);
    CHECK(s.current_question().qtype == before.qtype);
    CHECK(s.current_question().id != before.id);
    std::set<std::string> ids;
    for (const auto& q : s.questionnaire()) ids.insert(q.id);
    CHECK(ids.size() == 30);
    CHECK_FALSE(ids.contains(before.id));
}

TEST_CASE("revalidation budget", "[session]") {
    Session s = fresh();
    for (int i = 0; i < 6; ++i) s.skip_question();
    CHECK(s.state() == SessionState::Active);
    CHECK(s.revalidations() == 6);
    auto r = s.skip_question();
    CHECK(s.state() == SessionState::Invalid);
    CHECK(r.state == SessionState::Invalid);
    CHECK(r.events.back()["event"] == "invalidate");
    CHECK(error_of([&] { s.skip_question(); }) == ErrorCode::State);
    CHECK(error_of([&] { s.submit_answer(AnswerValue::Yes, 0, 1, kCalm); }) == ErrorCode::State);
    CHECK(s.revalidations() == 7);
}

TEST_CASE("skip on a completed session is a state error", "[session]") {
    Session s = fresh();
    std::vector<SessionEvent> log;
    answer_all(s, log);
    CHECK(s.state() == SessionState::Completed);
    CHECK(error_of([&] { s.skip_question(); }) == ErrorCode::State);
}

TEST_CASE("disqualified emotion appends a same-type revalidation", "[session]") {
    Session s = fresh();
    const Question first = s.current_question();
    auto r = s.submit_answer(AnswerValue::Yes, 0, 2500, kShaky);
    REQUIRE(r.record);
    CHECK(r.record->flagged);
    REQUIRE(r.replacement);
    CHECK(r.replacement->qtype == first.qtype);
    CHECK(s.questionnaire().size() == 31);
    CHECK(s.questionnaire().back() == *r.replacement);
    CHECK(s.revalidations() == 1);

    std::vector<SessionEvent> log;
    answer_all(s, log);
    CHECK(s.state() == SessionState::Completed);
    CHECK(s.records().size() == 31);
    CHECK(s.standard_records().size() == 30);
}

TEST_CASE("mixed skips and disqualifications share one budget", "[session]") {
    Session s = fresh();
    for (int i = 0; i < 3; ++i) s.skip_question();
    for (int i = 0; i < 3; ++i) s.submit_answer(AnswerValue::No, 0, 3000, kShaky);
    CHECK(s.revalidations() == 6);
    CHECK(s.state() == SessionState::Active);
    s.submit_answer(AnswerValue::No, 0, 3000, kShaky);
    CHECK(s.state() == SessionState::Invalid);
}

TEST_CASE("average latency", "[session]") {
    auto rec = [](std::int64_t ms) { return make_record("q", QuestionType::Kind::HA_NS, AnswerValue::Yes, ms, kCalm); };
    CHECK(average_latency_ms({rec(3000)}) == 3000.0);
    CHECK(average_latency_ms({rec(2000), rec(4000)}) == 3000.0);
    CHECK(error_of([] { average_latency_ms({}); }) == ErrorCode::Empty);

    Session s = fresh();
    s.submit_answer(AnswerValue::Yes, 0, 1000, kShaky);
    std::vector<SessionEvent> log;
    answer_all(s, log);
    REQUIRE(s.records().size() == 31);
    double sum = 0;
    for (const auto& r : s.records()) sum += static_cast<double>(r.latency_ms);
    CHECK(s.average_latency() == Catch::Approx(sum / 31).epsilon(1e-15));
    CHECK(s.average_latency() == Catch::Approx((1000.0 + 30 * 3000.0) / 31));
}

TEST_CASE("latency scaling multiplies the mean exactly", "[session][property]") {
    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<AnswerRecord> a, b;
        const std::int64_t k = 1 + static_cast<std::int64_t>(rng.below(4));
        for (int i = 0; i < 30; ++i) {
            const auto ms = 200 + static_cast<std::int64_t>(rng.below(2300));
            a.push_back(make_record("q", QuestionType::Kind::HA_NS, AnswerValue::Yes, ms, kCalm));
            b.push_back(make_record("q", QuestionType::Kind::HA_NS, AnswerValue::Yes, ms * k, kCalm));
        }
        REQUIRE(average_latency_ms(b) == Catch::Approx(average_latency_ms(a) * static_cast<double>(k)).epsilon(1e-15));
    }
}

TEST_CASE("event log replay reconstructs the session", "[session][replay]") {
    Session s = fresh(21);
    std::vector<SessionEvent> log{s.start_event()};
    std::vector<Session> states{s};
    std::int64_t t = 0;
    int step = 0;
    while (s.state() == SessionState::Active) {
        TransitionReport r = (step % 7 == 3) ? s.skip_question()
                                             : s.submit_answer(step % 2 ? AnswerValue::Yes : AnswerValue::No, t,
                                                               t + 1000 + step * 37, step % 11 == 5 ? kShaky : kCalm);
        log.insert(log.end(), r.events.begin(), r.events.end());
        states.push_back(s);
        t += 5000;
        ++step;
    }
    CHECK(replay_session(log, bank()) == s);

    SECTION("every command prefix replays to the matching live state") {
        std::size_t command = 0;
        for (std::size_t n = 1; n <= log.size(); ++n) {
            const std::string kind = log[n - 1]["event"];
            if (kind == "answer" || kind == "skip") ++command;
            const std::vector<SessionEvent> prefix(log.begin(), log.begin() + static_cast<std::ptrdiff_t>(n));
            REQUIRE(replay_session(prefix, bank()) == states[command]);
        }
    }
    SECTION("a tampered log is rejected") {
        auto bad = log;
        for (auto& e : bad)
            if (e["event"] == "skip") {
                e["replacement"] = "Q0001";
                break;
            }
        CHECK(error_of([&] { replay_session(bad, bank()); }) == ErrorCode::Integrity);
        CHECK(error_of([&] { replay_session({}, bank()); }) == ErrorCode::Integrity);
    }
}

TEST_CASE("state machine invariants under random operation sequences (property)", "[session][property]") {
    Rng rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
        Session s = fresh(rng.next());
        int last_reval = 0;
        std::size_t skips = 0;
        while (s.state() == SessionState::Active) {
            const auto op = rng.below(10);
            if (op == 0) {
                s.skip_question();
                ++skips;
            } else {
                const EmotionSample e{0.0, 0.0, op == 1 ? 0.2 : 0.8};
                s.submit_answer(rng.below(2) ? AnswerValue::Yes : AnswerValue::No, 0,
                                static_cast<std::int64_t>(rng.below(12000)), e);
            }
            REQUIRE(s.revalidations() >= last_reval);
            last_reval = s.revalidations();
            REQUIRE((s.state() == SessionState::Invalid) == (s.revalidations() > 6));
            REQUIRE(s.records().size() == std::min(s.cursor(), s.questionnaire().size()));
            for (const auto& r : s.records()) {
                REQUIRE(r.latency_ms >= 200);
                REQUIRE(r.latency_ms <= 10000);
                REQUIRE(r.granted == granted_dimension(r.qtype, r.answer));
            }
        }
        if (s.state() == SessionState::Completed) {
            std::size_t flagged = 0;
            for (const auto& r : s.records()) flagged += r.flagged;
            REQUIRE(s.records().size() == 30 + flagged);
            REQUIRE(static_cast<std::size_t>(s.revalidations()) == skips + flagged);
        }
        const Session frozen = s;
        CHECK_THROWS_AS(s.skip_question(), Error);
        CHECK(s == frozen);
    }
}
