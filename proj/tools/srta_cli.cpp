// srta: operator tool for banks, cohorts, training, simulation and the service.
//
// Exit status: 0 on success, 1 on a domain or I/O error (message on stderr),
// and CLI11's usage codes for bad arguments.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "srta/cohort.hpp"
#include "srta/http_server.hpp"
#include "srta/scoring.hpp"
#include "srta/service.hpp"

using namespace srta;
using nlohmann::json;

namespace {

bool g_json = false;

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::Io, "cannot open " + path);
    return in;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::Io, "cannot write " + path);
    return out;
}

BankFormat parse_format(const std::string& s) {
    if (s == "auto") return BankFormat::Auto;
    if (s == "lines") return BankFormat::Lines;
    if (s == "json") return BankFormat::Json;
    fail(ErrorCode::Validation, "unknown bank format '" + s + "'");
}

// The built-in bank is the synthetic 1,200-item bank shipped as data/question_bank.txt.
QuestionBank bank_from(const std::string& path) {
    if (path.empty()) return make_synthetic_bank(200);
    auto in = open_in(path);
    return load_bank(in);
}

AnswerModel parse_model(const std::string& s) {
    if (s == "majority") return AnswerModel::Majority;
    if (s == "proportional") return AnswerModel::Proportional;
    fail(ErrorCode::Validation, "unknown answer model '" + s + "'");
}

std::vector<std::size_t> all_rows(const nn::Dataset& d) {
    std::vector<std::size_t> rows(d.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    return rows;
}

json metrics_json(const nn::Metrics& m) {
    return {{"accuracy", m.accuracy},
            {"precision", m.precision},
            {"recall", m.recall},
            {"f1", m.f1},
            {"macro_precision", m.macro_precision},
            {"macro_f1", m.macro_f1},
            {"confusion", m.confusion}};
}

void print_metrics(const nn::Metrics& m, double oracle) {
    std::printf("accuracy        %.4f\n", m.accuracy);
    std::printf("macro F1        %.4f\n", m.macro_f1);
    std::printf("macro precision %.4f\n", m.macro_precision);
    std::printf("bin-count ceiling accuracy %.4f\n", oracle);
    std::printf("class  precision  recall  F1\n");
    for (std::size_t c = 0; c < m.f1.size(); ++c)
        std::printf("%-5s  %9.4f  %6.4f  %6.4f\n", std::string(code_of(static_cast<Dimension>(c))).c_str(),
                    m.precision[c], m.recall[c], m.f1[c]);
    std::printf("confusion (rows true HA RD NS, columns predicted)\n");
    for (const auto& row : m.confusion) {
        for (auto v : row) std::printf(" %6zu", v);
        std::printf("\n");
    }
}

// ---------------------------------------------------------------- commands

void cmd_bank_validate(const std::string& file, const std::string& format) {
    auto in = open_in(file);
    const QuestionBank bank = load_bank(in, parse_format(format));
    if (g_json) {
        json counts;
        for (auto k : QuestionType::all()) counts[QuestionType(k).code()] = bank.of_type(k).size();
        std::cout << json{{"valid", true}, {"questions", bank.size()}, {"per_type", counts}}.dump() << "\n";
        return;
    }
    std::printf("ok: %zu questions\n", bank.size());
    for (auto k : QuestionType::all()) {
        const QuestionType t(k);
        std::printf("  %s %s %zu\n", t.code().c_str(), t.major() ? "major" : "minor", bank.of_type(k).size());
    }
}

void cmd_bank_gen(std::size_t per_type, const std::string& out_path, const std::string& format) {
    const QuestionBank bank = make_synthetic_bank(per_type);
    auto out = open_out(out_path);
    if (format == "json") save_bank_json(out, bank);
    else if (format == "lines") save_bank(out, bank);
    else fail(ErrorCode::Validation, "bank gen writes 'lines' or 'json'");
    if (!g_json) std::printf("wrote %zu questions to %s\n", bank.size(), out_path.c_str());
}

void cmd_cohort_gen(std::size_t n, double noise, std::uint64_t seed, const std::string& out_path,
                    const std::string& bank_path, const std::string& model) {
    const QuestionBank bank = bank_from(bank_path);
    const Cohort c = generate_cohort(n, noise, seed, bank, parse_model(model));
    auto out = open_out(out_path);
    write_cohort_csv(out, c.data);
    out.flush();
    if (!out) fail(ErrorCode::Io, "write to " + out_path + " failed");
    const double oracle = bin_count_accuracy(c.data, all_rows(c.data));
    if (g_json) {
        std::cout << json{{"rows", n},
                          {"features", kFeatureCount},
                          {"class_counts", {{"HA", c.class_counts[0]}, {"RD", c.class_counts[1]}, {"NS", c.class_counts[2]}}},
                          {"bin_count_accuracy", oracle}}
                         .dump()
                  << "\n";
        return;
    }
    std::printf("wrote %zu sessions x %zu features to %s\n", n, kFeatureCount, out_path.c_str());
    std::printf("class counts HA %zu RD %zu NS %zu\n", c.class_counts[0], c.class_counts[1], c.class_counts[2]);
    std::printf("bin-count label recovery %.4f\n", oracle);
}

nn::Dataset load_cohort(const std::string& path) {
    auto in = open_in(path);
    nn::Dataset d = read_cohort_csv(in);
    nn::require_valid(d);
    if (d.size() == 0) fail(ErrorCode::Empty, "cohort " + path + " has no rows");
    return d;
}

void cmd_train(const std::string& cohort_path, const std::string& config_path, const std::string& checkpoint_path) {
    nn::TrainSetup setup;
    if (!config_path.empty()) {
        auto in = open_in(config_path);
        setup = nn::parse_train_setup(in);
    }
    const nn::Dataset data = load_cohort(cohort_path);
    std::vector<std::size_t> sizes{data.features.front().size()};
    sizes.insert(sizes.end(), setup.hidden.begin(), setup.hidden.end());
    sizes.push_back(3);
    const nn::Mlp init = nn::Mlp::initialized(sizes, setup.activation, setup.train.seed);
    const nn::TrainReport report = nn::train(init, data, setup.train);
    const nn::Metrics m = nn::evaluate(report.net, data, report.split.test);
    const double oracle = bin_count_accuracy(data, report.split.test);

    if (!checkpoint_path.empty()) {
        auto out = open_out(checkpoint_path);
        out << nn::checkpoint_to_json(report.net, setup.train.seed).dump() << "\n";
        if (!out) fail(ErrorCode::Io, "write to " + checkpoint_path + " failed");
    }
    if (g_json) {
        json epochs = json::array();
        for (const auto& e : report.epochs) epochs.push_back({{"epoch", e.epoch}, {"train_mse", e.train_mse}, {"val_mse", e.val_mse}});
        std::cout << json{{"epochs", epochs},
                          {"initial_val_mse", report.initial_val_mse},
                          {"best_val_mse", report.best_val_mse},
                          {"best_epoch", report.best_epoch},
                          {"stop_reason", nn::to_string(report.stop_reason)},
                          {"split", {{"train", report.split.train.size()},
                                     {"validation", report.split.validation.size()},
                                     {"test", report.split.test.size()}}},
                          {"test", metrics_json(m)},
                          {"bin_count_accuracy", oracle}}
                         .dump()
                  << "\n";
        return;
    }
    std::printf("split train %zu / validation %zu / test %zu\n", report.split.train.size(),
                report.split.validation.size(), report.split.test.size());
    std::printf("epoch 0 val_mse %.6f\n", report.initial_val_mse);
    for (const auto& e : report.epochs)
        std::printf("epoch %d train_mse %.6f val_mse %.6f\n", e.epoch, e.train_mse, e.val_mse);
    std::printf("stopped: %s after %zu epochs; best val_mse %.6g at epoch %d\n",
                std::string(nn::to_string(report.stop_reason)).c_str(), report.epochs.size(), report.best_val_mse,
                report.best_epoch);
    std::printf("test split (%zu sessions)\n", report.split.test.size());
    print_metrics(m, oracle);
    if (!checkpoint_path.empty()) std::printf("checkpoint written to %s\n", checkpoint_path.c_str());
}

void cmd_eval(const std::string& checkpoint_path, const std::string& cohort_path) {
    auto in = open_in(checkpoint_path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        fail(ErrorCode::Parse, "checkpoint " + checkpoint_path + ": " + e.what());
    }
    const nn::Checkpoint cp = nn::checkpoint_from_json(j);
    const nn::Dataset data = load_cohort(cohort_path);
    if (data.features.front().size() != cp.net.input_size())
        fail(ErrorCode::Shape, "cohort has " + std::to_string(data.features.front().size()) +
                                   " features, checkpoint expects " + std::to_string(cp.net.input_size()));
    const nn::Metrics m = nn::evaluate(cp.net, data);
    const double oracle = bin_count_accuracy(data, all_rows(data));
    if (g_json) {
        std::cout << json{{"rows", data.size()}, {"metrics", metrics_json(m)}, {"bin_count_accuracy", oracle}}.dump()
                  << "\n";
        return;
    }
    std::printf("evaluated %zu sessions\n", data.size());
    print_metrics(m, oracle);
}

void cmd_simulate(std::uint64_t persona_seed, std::optional<std::uint64_t> session_seed, const std::string& bank_path,
                  double noise, int education, int job, const std::string& model) {
    auto bank = std::make_shared<const QuestionBank>(bank_from(bank_path));
    const Persona p = sample_persona(persona_seed, noise);
    const std::uint64_t seed = session_seed.value_or(derive_seed(persona_seed, 1));
    const Session s = run_synthetic_session(p, bank, seed, "synthetic", parse_model(model));
    if (s.state() != SessionState::Completed)
        fail(ErrorCode::State, "synthetic session ended " + std::string(to_string(s.state())) + " after " +
                                   std::to_string(s.revalidations()) + " revalidations");
    const ResultBundle r = compute_result(s, {education, job});
    json out = r;
    if (g_json) {
        out = {{"persona",
                {{"weights", {{"HA", p.weights[0]}, {"RD", p.weights[1]}, {"NS", p.weights[2]}}},
                 {"label", code_of(p.label())},
                 {"latency_mean_ms", p.latency_mean_ms},
                 {"disposition", p.disposition},
                 {"noise", p.noise}}},
               {"session_seed", seed},
               {"revalidations", s.revalidations()},
               {"records", s.records().size()},
               {"result", r}};
    }
    std::cout << out.dump(2) << "\n";
}

httplib::Server* g_server = nullptr;

void on_signal(int) {
    if (g_server) g_server->stop();
}

void cmd_serve(const std::string& addr, const std::string& data_dir, const std::string& bank_path,
               const std::string& key_file, const std::string& static_dir) {
    const ListenAddress listen = parse_listen_address(addr);
    auto bank = std::make_shared<const QuestionBank>(bank_from(bank_path));
    std::filesystem::create_directories(data_dir);
    const std::string key_path = key_file.empty() ? (std::filesystem::path(data_dir) / "signing.key").string() : key_file;
    ServiceConfig cfg;
    cfg.data_dir = data_dir;
    Service service(bank, SigningKey::load_or_create(key_path), cfg);

    httplib::Server server;
    bind_routes(server, service);
    mount_static(server, static_dir);
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    if (!server.bind_to_port(listen.host, listen.port))
        fail(ErrorCode::Io, "cannot bind " + listen.host + ":" + std::to_string(listen.port));
    std::fprintf(stderr, "srta serving /v1 on %s:%d (data %s, key id %s)\n", listen.host.c_str(), listen.port,
                 data_dir.c_str(), service.signing_key().key_id().c_str());
    server.listen_after_bind();
    g_server = nullptr;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Situational risk tolerance assessment toolkit"};
    app.require_subcommand(1);
    app.add_flag("--json", g_json, "Machine-readable JSON output");

    auto* bank = app.add_subcommand("bank", "Question bank files");
    bank->require_subcommand(1);
    std::string bank_file, bank_format = "auto", gen_out, gen_format = "lines";
    std::size_t per_type = 200;
    auto* validate = bank->add_subcommand("validate", "Load and check a bank file");
    validate->add_option("file", bank_file, "Bank file")->required();
    validate->add_option("--format", bank_format, "auto, lines or json");
    auto* bank_gen = bank->add_subcommand("gen", "Write the synthetic placeholder bank");
    bank_gen->add_option("--per-type", per_type, "Questions per type")->check(CLI::PositiveNumber);
    bank_gen->add_option("--out", gen_out, "Output file")->required();
    bank_gen->add_option("--format", gen_format, "lines or json");

    auto* cohort = app.add_subcommand("cohort", "Synthetic labelled cohorts");
    cohort->require_subcommand(1);
    std::size_t n = 2000;
    double noise = 0.1;
    std::uint64_t seed = 1;
    std::string cohort_out, cohort_bank, answer_model = "majority";
    auto* cohort_gen = cohort->add_subcommand("gen", "Generate a cohort CSV");
    cohort_gen->add_option("--n", n, "Number of sessions")->check(CLI::PositiveNumber);
    cohort_gen->add_option("--noise", noise, "Answer and emotion noise in [0, 1]")->check(CLI::Range(0.0, 1.0));
    cohort_gen->add_option("--seed", seed, "Generator seed");
    cohort_gen->add_option("--out", cohort_out, "Output CSV")->required();
    cohort_gen->add_option("--bank", cohort_bank, "Bank file (default: built-in synthetic bank)");
    cohort_gen->add_option("--answer-model", answer_model, "majority or proportional");

    std::string train_cohort, train_config, train_checkpoint;
    auto* train = app.add_subcommand("train", "Train the network on a cohort");
    train->add_option("--cohort", train_cohort, "Cohort CSV")->required();
    train->add_option("--config", train_config, "Training config (key = value)");
    train->add_option("--out-checkpoint", train_checkpoint, "Write the best-validation network here");

    std::string eval_checkpoint, eval_cohort;
    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a cohort");
    eval->add_option("--checkpoint", eval_checkpoint, "Checkpoint JSON")->required();
    eval->add_option("--cohort", eval_cohort, "Cohort CSV")->required();

    std::uint64_t persona_seed = 1;
    std::optional<std::uint64_t> session_seed;
    std::string sim_bank, sim_model = "majority";
    double sim_noise = 0.1;
    int education = 3, job = 3;
    auto* simulate = app.add_subcommand("simulate", "Run one synthetic session and print its result");
    simulate->add_option("--persona-seed", persona_seed, "Persona seed")->required();
    simulate->add_option("--session-seed", session_seed, "Session seed (default: derived from the persona seed)");
    simulate->add_option("--bank", sim_bank, "Bank file (default: built-in synthetic bank)");
    simulate->add_option("--noise", sim_noise, "Persona noise in [0, 1]")->check(CLI::Range(0.0, 1.0));
    simulate->add_option("--education", education, "Education level 1-6")->check(CLI::Range(1, 6));
    simulate->add_option("--job", job, "Job level 1-6")->check(CLI::Range(1, 6));
    simulate->add_option("--answer-model", sim_model, "majority or proportional");

    std::string addr = env_or("SRTA_ADDR", "127.0.0.1:8080");
    std::string data_dir = env_or("SRTA_DATA_DIR", "srta-data");
    std::string serve_bank = env_or("SRTA_BANK_FILE", "");
    std::string key_file = env_or("SRTA_SIGNING_KEY_FILE", "");
    std::string static_dir = env_or("SRTA_STATIC_DIR", "");
    auto* serve = app.add_subcommand("serve", "Run the HTTP service");
    serve->add_option("--addr", addr, "host:port (env SRTA_ADDR)");
    serve->add_option("--data-dir", data_dir, "Event logs and accounts (env SRTA_DATA_DIR)");
    serve->add_option("--bank", serve_bank, "Bank file (env SRTA_BANK_FILE)");
    serve->add_option("--key-file", key_file, "Signing key file, created if missing (env SRTA_SIGNING_KEY_FILE)");
    serve->add_option("--static-dir", static_dir, "Web client directory (env SRTA_STATIC_DIR)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*validate) cmd_bank_validate(bank_file, bank_format);
        else if (*bank_gen) cmd_bank_gen(per_type, gen_out, gen_format);
        else if (*cohort_gen) cmd_cohort_gen(n, noise, seed, cohort_out, cohort_bank, answer_model);
        else if (*train) cmd_train(train_cohort, train_config, train_checkpoint);
        else if (*eval) cmd_eval(eval_checkpoint, eval_cohort);
        else if (*simulate) cmd_simulate(persona_seed, session_seed, sim_bank, sim_noise, education, job, sim_model);
        else if (*serve) cmd_serve(addr, data_dir, serve_bank, key_file, static_dir);
    } catch (const Error& e) {
        std::cerr << "srta: " << to_string(e.code()) << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "srta: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
