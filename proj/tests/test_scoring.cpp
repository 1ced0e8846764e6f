#include "catch_amalgamated.hpp"

#include <map>
#include <memory>
#include <set>

#include "srta/scoring.hpp"

using namespace srta;

namespace {

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

AnswerRecord rec(QuestionType t, AnswerValue a, std::int64_t ms = 3000, EmotionSample e = {0.2, 0.1, 1.0},
                 bool flagged = false) {
    AnswerRecord r = make_record("q", t, a, ms, e);
    r.flagged = flagged;
    return r;
}

}  // namespace

TEST_CASE("risk coefficient table is a bijection onto 1..6", "[scoring]") {
    std::set<int> seen;
    for (auto p : kDimensions)
        for (auto s : kDimensions) {
            if (p == s) {
                CHECK(error_of([&] { risk_coefficient(p, s); }) == ErrorCode::Domain);
                continue;
            }
            seen.insert(risk_coefficient(p, s));
        }
    CHECK(seen == std::set<int>{1, 2, 3, 4, 5, 6});
    CHECK(risk_coefficient(Dimension::HA, Dimension::RD) == 1);
    CHECK(risk_coefficient(Dimension::NS, Dimension::RD) == 6);
}

TEST_CASE("risk_profile examples", "[scoring]") {
    const RiskProfile a = risk_profile_from_counts({14, 10, 6});
    CHECK(a.primary == Dimension::HA);
    CHECK(a.secondary == Dimension::RD);
    CHECK(a.coefficient == 1);
    CHECK(a.label() == "Averse Dependent");

    const RiskProfile b = risk_profile_from_counts({6, 12, 12});
    CHECK(b.primary == Dimension::NS);
    CHECK(b.secondary == Dimension::RD);
    CHECK(b.coefficient == 6);

    const RiskProfile c = risk_profile({rec(QuestionType::Kind::NS_RD, AnswerValue::Yes)});
    CHECK(c.primary == Dimension::NS);
    CHECK(c.secondary == Dimension::RD);
    CHECK(c.bin_counts == std::array<int, 3>{0, 0, 1});

    CHECK(risk_profile_from_counts({10, 10, 10}).coefficient == 6);
    CHECK(risk_profile_from_counts({10, 10, 0}).primary == Dimension::RD);
    CHECK(error_of([] { risk_profile({}); }) == ErrorCode::Empty);
}

TEST_CASE("truthfulness", "[scoring]") {
    CHECK(truthfulness(0) == 1.0);
    CHECK(truthfulness(6) == Catch::Approx(0.8333).margin(1e-4));
    CHECK(truthfulness(6) == 30.0 / 36.0);
    CHECK(truthfulness(3) == 30.0 / 33.0);
    for (int r = 1; r <= 6; ++r) CHECK(truthfulness(r) < truthfulness(r - 1));
    CHECK(error_of([] { truthfulness(-1); }) == ErrorCode::Domain);
    CHECK(error_of([] { truthfulness(7); }) == ErrorCode::Domain);
}

TEST_CASE("thinking type grid and boundaries", "[scoring]") {
    const std::map<double, LatencyBand> grid{{1000, LatencyBand::XS}, {2000, LatencyBand::S}, {3000, LatencyBand::M},
                                             {4000, LatencyBand::L},  {5000, LatencyBand::XL}};
    for (const auto& [ms, band] : grid) {
        const ThinkingType t = thinking_type(ms);
        CHECK(t.band == band);
        CHECK(t.coefficient == static_cast<int>(band));
    }
    CHECK(thinking_type(1500).band == LatencyBand::S);
    CHECK(thinking_type(1499.999).band == LatencyBand::XS);
    CHECK(thinking_type(2500).band == LatencyBand::M);
    CHECK(thinking_type(3500).band == LatencyBand::L);
    CHECK(thinking_type(4500).band == LatencyBand::XL);
    CHECK(thinking_type(4499.999).band == LatencyBand::L);

    CHECK(thinking_type(100).band == LatencyBand::XS);
    CHECK(thinking_type(100).unusual);
    const ThinkingType slow = thinking_type(8000);
    CHECK(slow.band == LatencyBand::XL);
    CHECK(slow.coefficient == 5);
    CHECK(slow.unusual);
    CHECK_FALSE(thinking_type(2000).unusual);
    CHECK_FALSE(thinking_type(7000).unusual);
    CHECK(thinking_type(1999).unusual);
    CHECK(thinking_type(7001).unusual);

    CHECK(error_of([] { thinking_type(0); }) == ErrorCode::Domain);
    CHECK(error_of([] { thinking_type(-5); }) == ErrorCode::Domain);

    LatencyModel wide;
    wide.mu_ms = 4000;
    wide.sigma_ms = 500;
    CHECK(thinking_type(3000, wide).band == LatencyBand::XS);  // below 3250
    CHECK(thinking_type(3500, wide).band == LatencyBand::S);
    CHECK(thinking_type(4000, wide).band == LatencyBand::M);
}

TEST_CASE("thinking type partitions the positive axis (property)", "[scoring][property]") {
    Rng rng(17);
    for (int i = 0; i < 20000; ++i) {
        const double ms = 1e-3 + rng.uniform() * 12000.0;
        const ThinkingType t = thinking_type(ms);
        // independent classification by counting edges at or below the value
        int above = 0;
        for (double edge : {1500.0, 2500.0, 3500.0, 4500.0}) above += ms >= edge;
        REQUIRE(t.coefficient == 1 + above);
    }
}

TEST_CASE("biometric types", "[scoring]") {
    CHECK(biometric_type_categorical("Disgust").category == 1);
    CHECK(biometric_type_categorical("Contempt").category == 1);
    CHECK(biometric_type_categorical("Fear").category == 2);
    CHECK(biometric_type_categorical("Anger").label == BiometricLabel::AngerFear);
    CHECK(biometric_type_categorical("Sadness").category == 3);
    CHECK(biometric_type_categorical("Neutral").category == 4);
    CHECK(biometric_type_categorical("Surprise").label == BiometricLabel::SurpriseNeutral);
    CHECK(error_of([] { biometric_type_categorical("Boredom"); }) == ErrorCode::Validation);

    CHECK(biometric_type_continuous(-0.5, -0.5).category == 1);
    CHECK(biometric_type_continuous(-0.5, 0.5).category == 2);
    CHECK(biometric_type_continuous(0.8, -0.2).category == 3);
    CHECK(biometric_type_continuous(0.0, 0.0).category == 4);
    CHECK(biometric_type_continuous(-0.1, 0.0).category == 2);
    CHECK(biometric_type_continuous(0.0, -0.1).category == 3);
    CHECK(error_of([] { biometric_type_continuous(1.5, 0.0); }) == ErrorCode::Domain);
}

TEST_CASE("leadership", "[scoring]") {
    CHECK(leadership(10000, {6, 6}) == 120.0);
    CHECK(leadership(3000, {1, 1}) == 1.0);
    CHECK(leadership(1500, {4, 2}) == 4.0);
    CHECK(leadership(9000, {6, 6}) == Catch::Approx(108.0));
    CHECK(error_of([] { leadership(0, {1, 1}); }) == ErrorCode::Domain);
    CHECK(error_of([] { leadership(10001, {1, 1}); }) == ErrorCode::Domain);
    CHECK(error_of([] { leadership(3000, {0, 1}); }) == ErrorCode::Domain);
    CHECK(error_of([] { leadership(3000, {1, 7}); }) == ErrorCode::Domain);
    LatencyModel fast;
    fast.mu_ms = 1000;
    CHECK(leadership(10000, {6, 6}, fast) == 120.0);  // clamped
}

TEST_CASE("session confidence", "[scoring]") {
    const auto t = QuestionType::Kind::HA_NS;
    CHECK(session_confidence({rec(t, AnswerValue::Yes, 3000, {0, 0, 1.0}), rec(t, AnswerValue::No, 3000, {0, 0, 1.0})}) ==
          1.0);
    CHECK(session_confidence({rec(t, AnswerValue::Yes, 3000, {0, 0, 0.6}), rec(t, AnswerValue::No, 3000, {0, 0, 0.8})}) ==
          Catch::Approx(0.7).epsilon(1e-15));
    CHECK(session_confidence({rec(t, AnswerValue::Yes, 3000, {0, 0, 0.9}, true),
                              rec(t, AnswerValue::No, 3000, {0, 0, 0.7})}) == 0.7);
    CHECK(error_of([&] { session_confidence({rec(t, AnswerValue::Yes, 3000, {0, 0, 0.9}, true)}); }) ==
          ErrorCode::Empty);

    const EmotionSample m = session_emotion({rec(t, AnswerValue::Yes, 3000, {0.4, -0.2, 0.9}),
                                             rec(t, AnswerValue::Yes, 3000, {-0.9, 0.9, 0.1}, true),
                                             rec(t, AnswerValue::No, 3000, {0.2, 0.4, 0.7})});
    CHECK(m.valence == Catch::Approx(0.3));
    CHECK(m.arousal == Catch::Approx(0.1));
}

TEST_CASE("index examples", "[scoring]") {
    const double max = iwi(6, 1.0, 5, 4, 1.0);
    CHECK(max == 120.0);
    CHECK(iwi_percent(max) == 1.0);

    const double low = iwi(1, truthfulness(6), 1, 1, 0.1);
    CHECK(low == Catch::Approx(0.0833).margin(1e-4));
    CHECK(iwi_percent(low) == 0.20);

    CHECK(iwi(3, 1.0, 3, 2, 0.5) == 9.0);
    CHECK(iwi_percent(9.0) == 0.20);
    CHECK(iwi_percent(60.0) == 0.5);
    CHECK(iwi(6, 1.0, 5, 4, 0.0) == 0.0);
}

TEST_CASE("index bounds and monotonicity (property)", "[scoring][property]") {
    for (int rp = 1; rp <= 6; ++rp)
        for (int r = 0; r <= 6; ++r)
            for (int tt = 1; tt <= 5; ++tt)
                for (int bt = 1; bt <= 4; ++bt)
                    for (double c : {0.0, 0.25, 0.5, 0.75, 1.0}) {
                        const double v = iwi(rp, truthfulness(r), tt, bt, c);
                        REQUIRE(v >= 0.0);
                        REQUIRE(v <= 120.0);
                        if (rp < 6) REQUIRE(iwi(rp + 1, truthfulness(r), tt, bt, c) >= v);
                        if (r < 6) REQUIRE(iwi(rp, truthfulness(r + 1), tt, bt, c) <= v);
                        if (tt < 5) REQUIRE(iwi(rp, truthfulness(r), tt + 1, bt, c) >= v);
                        if (bt < 4) REQUIRE(iwi(rp, truthfulness(r), tt, bt + 1, c) >= v);
                        if (c < 1.0) REQUIRE(iwi(rp, truthfulness(r), tt, bt, c + 0.25) >= v);
                        const double pct = iwi_percent(v);
                        REQUIRE(pct >= 0.2);
                        REQUIRE(pct <= 1.0);
                    }
}

TEST_CASE("compose_result assembles the bundle", "[scoring]") {
    const ResultBundle b = compose_result(risk_profile_from_counts({2, 3, 25}), 0, 5000,
                                          biometric_from_category(4), 1.0, {6, 6});
    CHECK(b.rp.coefficient == 6);
    CHECK(b.truthfulness == 1.0);
    CHECK(b.airt == 6.0);
    CHECK(b.tt.band == LatencyBand::XL);
    CHECK(b.leadership == 60.0);
    CHECK(b.iwi_raw == 120.0);
    CHECK(b.iwi_pct == 1.0);

    const ResultBundle c = compose_result(risk_profile_from_counts({15, 10, 5}), 3, 3000,
                                          biometric_from_category(2), 0.5, {2, 3});
    CHECK(c.airt == 30.0 / 33.0);
    CHECK(c.iwi_raw == Catch::Approx(30.0 / 33.0 * 3 * 2 * 0.5).epsilon(1e-15));
    CHECK(c.iwi_pct == 0.2);
}

TEST_CASE("compute_result from a session", "[scoring]") {
    auto bank = std::make_shared<const QuestionBank>(make_synthetic_bank(12));
    Session s = start_session("s", "u", bank, 5);
    CHECK(error_of([&] { compute_result(s, {1, 1}); }) == ErrorCode::State);
    std::int64_t t = 0;
    while (s.state() == SessionState::Active) {
        const QuestionType q = s.current_question().qtype;
        // answer so that NS always wins where possible, else RD
        const AnswerValue a = q.first() == Dimension::NS   ? AnswerValue::Yes
                              : q.second() == Dimension::NS ? AnswerValue::No
                              : q.first() == Dimension::RD  ? AnswerValue::Yes
                                                            : AnswerValue::No;
        s.submit_answer(a, t, t + 4000, {0.3, 0.3, 0.8});
        t += 10000;
    }
    const ResultBundle r = compute_result(s, {3, 2});
    CHECK(r.rp.bin_counts == std::array<int, 3>{0, 10, 20});
    CHECK(r.rp.coefficient == 6);
    CHECK(r.avg_latency_ms == 4000.0);
    CHECK(r.tt.band == LatencyBand::L);
    CHECK(r.bt.category == 4);
    CHECK(r.confidence == Catch::Approx(0.8).epsilon(1e-15));
    CHECK(r.leadership == Catch::Approx(8.0));
    CHECK(r.iwi_raw == Catch::Approx(6 * 4 * 4 * 0.8));
    CHECK(compute_result(s, {3, 2}) == r);
}

TEST_CASE("mini-session tallies match an independent count for all 256 patterns", "[scoring][oracle]") {
    const std::array<QuestionType, 8> types{QuestionType::Kind::HA_NS, QuestionType::Kind::RD_HA,
                                            QuestionType::Kind::NS_RD, QuestionType::Kind::NS_HA,
                                            QuestionType::Kind::HA_RD, QuestionType::Kind::RD_NS,
                                            QuestionType::Kind::HA_NS, QuestionType::Kind::NS_RD};
    for (unsigned pattern = 0; pattern < 256; ++pattern) {
        std::vector<AnswerRecord> records;
        std::map<std::string, int> tally{{"HA", 0}, {"RD", 0}, {"NS", 0}};
        for (unsigned i = 0; i < 8; ++i) {
            const bool yes = (pattern >> i) & 1u;
            records.push_back(rec(types[i], yes ? AnswerValue::Yes : AnswerValue::No));
            const std::string code = types[i].code();  // "XX/YY"
            ++tally[yes ? code.substr(0, 2) : code.substr(3, 2)];
        }
        const RiskProfile rp = risk_profile(records);
        REQUIRE(rp.bin_counts[0] == tally["HA"]);
        REQUIRE(rp.bin_counts[1] == tally["RD"]);
        REQUIRE(rp.bin_counts[2] == tally["NS"]);

        // first strict maximum scanning in tie priority order
        std::vector<std::string> order{"NS", "RD", "HA"};
        std::stable_sort(order.begin(), order.end(),
                         [&](const std::string& a, const std::string& b) { return tally[a] > tally[b]; });
        REQUIRE(code_of(rp.primary) == order[0]);
        REQUIRE(code_of(rp.secondary) == order[1]);
    }
}

TEST_CASE("result JSON", "[scoring][json]") {
    CHECK(round4(0.083333333) == 0.0833);
    CHECK(round4(30.0 / 33.0) == 0.9091);
    CHECK(round4(0.00125) == 0.0012);  // tie goes to even
    CHECK(round4(0.00135) == 0.0014);
    CHECK(round4(120.0) == 120.0);

    const ResultBundle b = compose_result(risk_profile_from_counts({9, 13, 8}), 2, 3412.5,
                                          biometric_type_continuous(0.3, -0.1), 0.77777777, {3, 4});
    const nlohmann::json j = b;
    CHECK(j["risk_profile"]["primary"] == "RD");
    CHECK(j["risk_profile"]["secondary"] == "HA");
    CHECK(j["risk_profile"]["label"] == "Dependent Averse");
    CHECK(j["risk_profile"]["bin_counts"]["RD"] == 13);
    CHECK(j["truthfulness"] == 0.9375);
    CHECK(j["thinking_type"]["band"] == "M");
    CHECK(j["biometric_type"]["label"] == "HappinessSadness");
    CHECK(j["confidence"] == 0.7778);

    const ResultBundle back = j.get<ResultBundle>();
    CHECK(back == wire_rounded(b));
    CHECK(nlohmann::json(back).dump() == j.dump());

    nlohmann::json bad = j;
    bad["risk_profile"]["coefficient"] = 5;
    CHECK(error_of([&] { (void)bad.get<ResultBundle>(); }) == ErrorCode::Validation);
    bad = j;
    bad.erase("iwi_raw");
    CHECK(error_of([&] { (void)bad.get<ResultBundle>(); }) == ErrorCode::Validation);
}
