#include "catch_amalgamated.hpp"

#include <sstream>

#include "srta/cohort.hpp"
#include "srta/scoring.hpp"

using namespace srta;

namespace {

const QuestionBank& bank() {
    static const QuestionBank b = make_synthetic_bank(40);
    return b;
}

double recovery(double noise, std::size_t n, std::uint64_t seed) {
    const Cohort c = generate_cohort(n, noise, seed, bank());
    std::vector<std::size_t> rows(n);
    for (std::size_t i = 0; i < n; ++i) rows[i] = i;
    return bin_count_accuracy(c.data, rows);
}

}  // namespace

TEST_CASE("sample_persona", "[cohort]") {
    for (std::uint64_t seed = 0; seed < 2000; ++seed) {
        const Persona p = sample_persona(mix64(seed), 0.2);
        REQUIRE(p.weights[0] + p.weights[1] + p.weights[2] == Catch::Approx(1.0).margin(1e-12));
        for (double w : p.weights) REQUIRE(w >= 0.0);
        REQUIRE(p.latency_mean_ms >= 2000.0);
        REQUIRE(p.latency_mean_ms <= 7000.0);
        REQUIRE(p.disposition == disposition_for(p.label()));
    }
    CHECK(sample_persona(5) == sample_persona(5));
    CHECK_THROWS_AS(sample_persona(5, 1.2), Error);
}

TEST_CASE("dominant dimension ties follow NS > RD > HA", "[cohort]") {
    CHECK(dominant(std::array<double, 3>{0.5, 0.3, 0.2}) == Dimension::HA);
    CHECK(dominant(std::array<double, 3>{0.4, 0.4, 0.2}) == Dimension::RD);
    CHECK(dominant(std::array<int, 3>{10, 10, 10}) == Dimension::NS);
    CHECK(dominant(std::array<int, 3>{3, 1, 3}) == Dimension::NS);
}

TEST_CASE("answer probabilities", "[cohort]") {
    Persona p;
    p.weights = {0.6, 0.3, 0.1};
    const QuestionType ha_ns = QuestionType::Kind::HA_NS;
    const QuestionType rd_ha = QuestionType::Kind::RD_HA;
    CHECK(probability_yes(p, ha_ns) == 1.0);
    CHECK(probability_yes(p, rd_ha) == 0.0);
    CHECK(probability_yes(p, ha_ns, AnswerModel::Proportional) == Catch::Approx(6.0 / 7.0));
    p.noise = 0.5;
    CHECK(probability_yes(p, ha_ns) == 0.75);
    p.noise = 1.0;
    for (auto k : QuestionType::all()) {
        CHECK(probability_yes(p, k) == 0.5);
        CHECK(probability_yes(p, k, AnswerModel::Proportional) == 0.5);
    }
}

TEST_CASE("generate_session", "[cohort]") {
    Persona pure;
    pure.weights = {1.0, 0.0, 0.0};
    pure.disposition = "tense-negative";
    const GeneratedSession g = generate_session(pure, bank(), 77);
    REQUIRE(g.records.size() == 30);
    CHECK(g.label == Dimension::HA);
    for (const auto& r : g.records) {
        if (r.qtype.involves(Dimension::HA)) REQUIRE(r.granted == Dimension::HA);
        REQUIRE(r.granted == granted_dimension(r.qtype, r.answer));
        REQUIRE(r.latency_ms >= 200);
        REQUIRE(r.latency_ms <= 10000);
    }
    CHECK(risk_profile(g.records).primary == Dimension::HA);
    CHECK(risk_profile(g.records).bin_counts[0] == 20);

    const GeneratedSession again = generate_session(pure, bank(), 77);
    CHECK(again.records == g.records);
    CHECK(again.questionnaire == g.questionnaire);
}

TEST_CASE("noise 1 answers are uniform", "[cohort][montecarlo]") {
    std::array<std::size_t, 6> yes{}, total{};
    for (std::uint64_t i = 0; i < 10000; ++i) {
        const Persona p = sample_persona(derive_seed(1, 2 * i), 1.0);
        const GeneratedSession g = generate_session(p, bank(), derive_seed(1, 2 * i + 1));
        for (const auto& r : g.records) {
            ++total[r.qtype.index()];
            yes[r.qtype.index()] += r.answer == AnswerValue::Yes;
        }
    }
    for (std::size_t t = 0; t < 6; ++t) {
        const double rate = static_cast<double>(yes[t]) / static_cast<double>(total[t]);
        INFO("type " << QuestionType(QuestionType::all()[t]).code() << " yes-rate " << rate);
        CHECK(std::abs(rate - 0.5) <= 0.02);
    }
}

TEST_CASE("bin-count oracle", "[cohort][oracle]") {
    CHECK(recovery(0.0, 3000, 5) == 1.0);
    const double r2 = recovery(0.2, 3000, 5);
    const double r5 = recovery(0.5, 3000, 5);
    const double r8 = recovery(0.8, 3000, 5);
    const double r10 = recovery(1.0, 3000, 5);
    INFO("recovery " << r2 << " " << r5 << " " << r8 << " " << r10);
    CHECK(r2 < 1.0 + 1e-12);
    CHECK(r2 > r5);
    CHECK(r5 > r8);
    CHECK(r8 > r10);
}

TEST_CASE("generate_cohort", "[cohort]") {
    const Cohort c = generate_cohort(200, 0.1, 9, bank());
    REQUIRE(c.data.size() == 200);
    CHECK(c.data.features[0].size() == 270);
    CHECK(c.class_counts[0] + c.class_counts[1] + c.class_counts[2] == 200);
    CHECK_NOTHROW(nn::require_valid(c.data));
    for (std::size_t i = 0; i < c.data.size(); ++i) REQUIRE(c.data.label(i) == index_of(c.labels[i]));
    CHECK(generate_cohort(200, 0.1, 9, bank()).data == c.data);

    const Cohort one = generate_cohort(1, 0.1, 9, bank());
    CHECK(one.data.size() == 1);
    CHECK(one.data.features[0] == c.data.features[0]);
    CHECK_THROWS_AS(generate_cohort(0, 0.1, 9, bank()), Error);
}

TEST_CASE("cohort CSV round-trip", "[cohort][csv]") {
    const Cohort c = generate_cohort(25, 0.3, 4, bank());
    std::stringstream io;
    write_cohort_csv(io, c.data);
    const std::string text = io.str();
    CHECK(text.rfind("f0,f1,", 0) == 0);
    CHECK(text.substr(0, text.find('\n')).ends_with(",f269,label"));
    CHECK(read_cohort_csv(io) == c.data);

    std::istringstream empty("");
    CHECK_THROWS_AS(read_cohort_csv(empty), Error);
    std::istringstream short_row("f0,f1,label\n0.5,HA\n");
    CHECK_THROWS_AS(read_cohort_csv(short_row), Error);
    std::istringstream bad_label("f0,f1,label\n0.5,0.1,XX\n");
    CHECK_THROWS_AS(read_cohort_csv(bad_label), Error);
}

TEST_CASE("run_synthetic_session drives the engine", "[cohort]") {
    auto b = std::make_shared<const QuestionBank>(make_synthetic_bank(40));
    const Persona p = sample_persona(3, 0.2);
    const Session s = run_synthetic_session(p, b, 11);
    CHECK(s.state() != SessionState::Active);
    if (s.state() == SessionState::Completed) CHECK(s.records().size() >= 30);
    const Session again = run_synthetic_session(p, b, 11);
    CHECK(again == s);
}
