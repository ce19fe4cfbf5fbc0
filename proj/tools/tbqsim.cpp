// tbqsim: scenario runner for the ultrafast time-bin qudit simulator.
//
// Subcommands:
//   simulate   Monte Carlo counts, probabilities, and key-rate report
//   analytic   oracle confusion matrices and key-rate report, no sampling
//   sweep      grid over one config parameter -> CSV
//   validate   oracle-vs-modular equivalence check (nonzero exit on failure)
//   rates      secret-key-rate tables R(d, Q)
//   apparatus  dump / reload the built element chains

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tbq/analysis.hpp"
#include "tbq/chain.hpp"
#include "tbq/config.hpp"
#include "tbq/montecarlo.hpp"
#include "tbq/oracle.hpp"
#include "tbq/serialize.hpp"

namespace fs = std::filesystem;
using namespace tbq;

namespace {

struct CommonOpts {
    std::string config_path;
    std::vector<std::string> params;
    std::string out_dir;
    std::string format;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::uint64_t shots = 0;
    bool shots_set = false;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool needs_config = true) {
    auto* c = cmd->add_option("--config", o.config_path, "scenario config file");
    if (needs_config) c->required();
    cmd->add_option("--param", o.params, "override a config key, key=value");
    cmd->add_option("--out", o.out_dir, "output directory (overrides output.dir)");
    cmd->add_option("--format", o.format, "counts file format: csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
    cmd->add_option("--seed", o.seed, "override run.seed")
        ->each([&o](const std::string&) { o.seed_set = true; });
    cmd->add_option("--shots", o.shots, "override run.shots")
        ->each([&o](const std::string&) { o.shots_set = true; });
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::io_error, "cannot read config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Scenario load_scenario(const CommonOpts& o) {
    std::vector<std::string> overrides = o.params;
    if (o.seed_set) overrides.push_back("run.seed=" + std::to_string(o.seed));
    if (o.shots_set) overrides.push_back("run.shots=" + std::to_string(o.shots));
    if (!o.out_dir.empty()) overrides.push_back("output.dir=" + o.out_dir);
    if (!o.format.empty()) overrides.push_back("output.format=" + o.format);
    return scenario_with_overrides(read_file(o.config_path), overrides);
}

void write_text(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(ErrorCode::io_error, "cannot write '" + path.string() + "'");
    out << text;
}

void write_json(const fs::path& path, const json& j) {
    write_text(path, j.dump(2) + "\n");
}

std::string pair_suffix(const BasisPair& p) {
    return std::to_string(p.alpha) + std::to_string(p.beta);
}

std::string counts_pair_csv(const CountMatrix& cm, const BasisPair& pair,
                            const Provenance& prov) {
    std::ostringstream out;
    out << "# schema_version=" << kSchemaVersion
        << " config_hash=" << detail::hash_hex(prov.config_hash)
        << " seed=" << prov.seed << "\n";
    out << "alpha,beta,prepared,outcome,count\n";
    for (int i = 0; i < cm.dimension; ++i)
        for (int j = 0; j <= cm.dimension; ++j) {
            out << pair.alpha << "," << pair.beta << "," << i << ",";
            if (j == cm.dimension)
                out << "none";
            else
                out << j;
            out << ","
                << cm.counts[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]
                << "\n";
        }
    return out.str();
}

int cmd_simulate(const CommonOpts& opts) {
    Scenario s = load_scenario(opts);
    Provenance prov{s.config_hash(), s.plan.seed};
    fs::path dir(s.output_dir);

    ExperimentCounts counts = run_experiment(s.plan, s.grid, s.hw, s.noise);
    for (const auto& [pair, cm] : counts) {
        if (s.output_format == "csv")
            write_text(dir / ("counts_" + pair_suffix(pair) + ".csv"),
                       counts_pair_csv(cm, pair, prov));
        else
            write_json(dir / ("counts_" + pair_suffix(pair) + ".json"),
                       counts_to_json(cm, pair, prov));
        write_json(dir / ("probabilities_" + pair_suffix(pair) + ".json"),
                   probabilities_to_json(probabilities(cm), pair.alpha, pair.beta,
                                         prov));
    }
    if (counts.count(BasisPair{0, 0}) && counts.count(BasisPair{1, 1})) {
        KeyRateReport r = build_report(counts);
        write_json(dir / "report.json", report_to_json(r, prov));
        std::cout << "qber " << r.qber << "  rate " << r.rate_bits
                  << " bits/sifted-photon  threshold " << r.threshold_qber << "\n";
    }
    std::cout << "wrote " << counts.size() << " count matrices to " << dir.string()
              << "\n";
    return 0;
}

int cmd_analytic(const CommonOpts& opts, bool dump_matrix) {
    Scenario s = load_scenario(opts);
    Provenance prov{s.config_hash(), s.plan.seed};
    fs::path dir(s.output_dir);
    auto comp = preparation_compensation_phases(s.hw, s.grid.dimension);

    std::map<int, Apparatus> chains;
    for (const auto& pair : s.plan.bases)
        if (!chains.count(pair.beta))
            chains.emplace(pair.beta, build_measurement_chain(
                                          s.grid.dimension, pair.beta, s.hw, s.grid));

    std::map<BasisPair, std::vector<std::vector<double>>> probs;
    for (const auto& pair : s.plan.bases) {
        auto p = oracle::confusion_matrix(chains.at(pair.beta), pair.alpha, comp);
        write_json(dir / ("probabilities_" + pair_suffix(pair) + ".json"),
                   probabilities_to_json(p, pair.alpha, pair.beta, prov));
        probs.emplace(pair, std::move(p));
    }
    if (dump_matrix)
        for (const auto& [beta, a] : chains)
            write_json(dir / ("matrix_b" + std::to_string(beta) + ".json"),
                       chain_matrix_to_json(oracle::full_matrix(a)));

    if (probs.count(BasisPair{0, 0}) && probs.count(BasisPair{1, 1})) {
        std::vector<double> f0, f1;
        for (int i = 0; i < s.grid.dimension; ++i) {
            f0.push_back(probs.at(BasisPair{0, 0})[static_cast<std::size_t>(i)]
                                                  [static_cast<std::size_t>(i)]);
            f1.push_back(probs.at(BasisPair{1, 1})[static_cast<std::size_t>(i)]
                                                  [static_cast<std::size_t>(i)]);
        }
        KeyRateReport r = report_from_fidelities(f0, f1, s.grid.dimension);
        write_json(dir / "report.json", report_to_json(r, prov));
        std::cout << "qber " << r.qber << "  rate " << r.rate_bits
                  << " bits/sifted-photon\n";
    }
    std::cout << "wrote analytic probabilities to " << dir.string() << "\n";
    return 0;
}

int cmd_sweep(const CommonOpts& opts) {
    Scenario base = load_scenario(opts);
    if (!base.has_sweep)
        throw Error(ErrorCode::config_error,
                    "sweep needs a [sweep] section in the config");
    std::string text = read_file(opts.config_path);

    std::ostringstream csv;
    csv << "# schema_version=" << kSchemaVersion
        << " config_hash=" << detail::hash_hex(base.config_hash())
        << " seed=" << base.plan.seed << "\n";
    csv << base.sweep.parameter << ",qber,rate_bits,min_matched_diagonal\n";
    for (int step = 0; step < base.sweep.steps; ++step) {
        double value = base.sweep.from +
                       (base.sweep.to - base.sweep.from) * step /
                           (base.sweep.steps - 1);
        std::vector<std::string> overrides = opts.params;
        overrides.push_back(base.sweep.parameter + "=" +
                            detail::fmt_double(value));
        Scenario s = scenario_with_overrides(text, overrides);
        auto comp = preparation_compensation_phases(s.hw, s.grid.dimension);
        std::vector<double> f0, f1;
        double min_diag = 1.0;
        for (int beta : {0, 1}) {
            Apparatus a =
                build_measurement_chain(s.grid.dimension, beta, s.hw, s.grid);
            auto p = oracle::confusion_matrix(a, beta, comp);
            for (int i = 0; i < s.grid.dimension; ++i) {
                double diag = p[static_cast<std::size_t>(i)]
                               [static_cast<std::size_t>(i)];
                (beta == 0 ? f0 : f1).push_back(diag);
                min_diag = std::min(min_diag, diag);
            }
        }
        KeyRateReport r = report_from_fidelities(f0, f1, s.grid.dimension);
        csv << detail::fmt_double(value) << "," << detail::fmt_double(r.qber)
            << "," << detail::fmt_double(r.rate_bits) << ","
            << detail::fmt_double(min_diag) << "\n";
    }
    fs::path out = fs::path(base.output_dir) / "sweep.csv";
    write_text(out, csv.str());
    std::cout << "wrote " << base.sweep.steps << " sweep rows to " << out.string()
              << "\n";
    return 0;
}

int cmd_validate(const CommonOpts& opts, int trials) {
    Scenario s = load_scenario(opts);
    auto comp = preparation_compensation_phases(s.hw, s.grid.dimension);
    bool ok = true;
    auto check = [&ok](const std::string& name, bool pass, const std::string& note) {
        std::cout << (pass ? "ok   " : "FAIL ") << name;
        if (!note.empty()) std::cout << "  (" << note << ")";
        std::cout << "\n";
        ok = ok && pass;
    };

    for (int beta : {0, 1}) {
        Apparatus a = build_measurement_chain(s.grid.dimension, beta, s.hw, s.grid);
        auto m = oracle::full_matrix(a);
        Rng rng = Rng::substream(s.plan.seed,
                                 {0xa11da7eULL, static_cast<std::uint64_t>(beta)});
        double worst = 0.0;
        for (int t = 0; t < trials; ++t) {
            PhotonicState in(s.grid);
            for (int mode = 0; mode < s.grid.dimension; ++mode)
                in.set_amplitude({mode, 0, a.input_pol},
                                 cplx{rng.uniform() * 2.0 - 1.0,
                                      rng.uniform() * 2.0 - 1.0});
            in = in.renormalized();
            PhotonicState via_matrix = m.apply_state(in);
            PhotonicState via_chain = propagate(in, a);
            double dist = 0.0;
            for (const auto& [mode, amp] : via_matrix.amplitudes())
                dist += std::norm(amp - via_chain.amplitude(mode));
            for (const auto& [mode, amp] : via_chain.amplitudes())
                if (via_matrix.amplitude(mode) == cplx{0.0, 0.0})
                    dist += std::norm(amp);
            worst = std::max(worst, std::sqrt(dist));
        }
        check("oracle-vs-modular basis " + std::to_string(beta), worst < 1e-10,
              "max deviation " + std::to_string(worst));

        bool lossless = true;
        for (const auto& e : a.elements)
            if (!is_lossless(e)) lossless = false;
        if (lossless)
            check("chain matrix is an isometry, basis " + std::to_string(beta),
                  m.isometry_error() < 1e-10, "");

        DetectionWindows wc = routing_table(a, beta, comp);
        DetectionWindows wo = oracle::routing_windows(a, beta, comp);
        bool same = wc.windows.size() == wo.windows.size();
        for (std::size_t i = 0; same && i < wc.windows.size(); ++i)
            same = std::abs(wc.windows[i].center_ns - wo.windows[i].center_ns) <
                   1e-9;
        check("routing tables agree, basis " + std::to_string(beta), same, "");
    }
    std::cout << (ok ? "validation passed\n" : "validation FAILED\n");
    return ok ? 0 : 1;
}

int cmd_rates(const std::vector<int>& dimensions, double qber_max, int steps,
              const std::string& out_dir) {
    std::ostringstream csv;
    csv << "# schema_version=" << kSchemaVersion << " qber_max=" << qber_max
        << " steps=" << steps << "\n";
    csv << "dimension,qber,rate_bits\n";
    for (int d : dimensions) {
        double threshold = key_rate_threshold(d);
        std::cout << "d=" << d << "  R(0)=" << secret_key_rate(d, 0.0)
                  << "  zero-rate QBER=" << threshold << "\n";
        for (int i = 0; i < steps; ++i) {
            double q = qber_max * i / (steps - 1);
            csv << d << "," << detail::fmt_double(q) << ","
                << detail::fmt_double(secret_key_rate(d, q)) << "\n";
        }
    }
    if (!out_dir.empty()) {
        fs::path out = fs::path(out_dir) / "rates.csv";
        write_text(out, csv.str());
        std::cout << "wrote rate table to " << out.string() << "\n";
    }
    return 0;
}

int cmd_apparatus(const CommonOpts& opts, const std::string& load_path) {
    if (!load_path.empty()) {
        Apparatus a = apparatus_from_text(read_file(load_path));
        DetectionWindows w = routing_table(a, a.basis);
        std::cout << "loaded apparatus: d=" << a.grid.dimension
                  << " basis=" << a.basis << " stages=" << a.stage_count << "\n";
        for (const auto& win : w.windows)
            std::cout << "outcome " << win.outcome << " -> "
                      << win.center_ns << " ns\n";
        return 0;
    }
    Scenario s = load_scenario(opts);
    fs::path dir(s.output_dir);
    for (int beta : {0, 1}) {
        Apparatus a = build_measurement_chain(s.grid.dimension, beta, s.hw, s.grid);
        std::string provenance = "# schema_version=" + std::string(kSchemaVersion) +
                                 " config_hash=" +
                                 detail::hash_hex(s.config_hash()) +
                                 " seed=" + std::to_string(s.plan.seed) + "\n";
        write_text(dir / ("apparatus_b" + std::to_string(beta) + ".txt"),
                   provenance + apparatus_to_text(a));
    }
    std::cout << "wrote apparatus descriptions to " << dir.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ultrafast time-bin qudit measurement simulator"};
    app.require_subcommand(1);

    CommonOpts sim_opts, ana_opts, sweep_opts, val_opts, app_opts;
    bool dump_matrix = false;
    int trials = 100;
    std::string load_path;
    std::vector<int> dimensions{2, 4, 8};
    double qber_max = 0.5;
    int steps = 51;
    std::string rates_out;

    auto* sim = app.add_subcommand("simulate", "Monte Carlo experiment");
    add_common(sim, sim_opts);
    auto* ana = app.add_subcommand("analytic", "oracle confusion matrices");
    add_common(ana, ana_opts);
    ana->add_flag("--dump-matrix", dump_matrix, "also write the chain matrices");
    auto* swp = app.add_subcommand("sweep", "scan one parameter");
    add_common(swp, sweep_opts);
    auto* val = app.add_subcommand("validate", "oracle-vs-modular check");
    add_common(val, val_opts);
    val->add_option("--trials", trials, "random states per basis");
    auto* rat = app.add_subcommand("rates", "secret-key-rate tables");
    rat->add_option("--dimensions", dimensions, "dimensions to tabulate");
    rat->add_option("--qber-max", qber_max, "largest QBER in the table");
    rat->add_option("--steps", steps, "rows per dimension");
    rat->add_option("--out", rates_out, "output directory for rates.csv");
    auto* apparatus = app.add_subcommand("apparatus", "dump or reload chains");
    add_common(apparatus, app_opts, /*needs_config=*/false);
    apparatus->add_option("--load", load_path, "reload a dumped apparatus file");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return cmd_simulate(sim_opts);
        if (ana->parsed()) return cmd_analytic(ana_opts, dump_matrix);
        if (swp->parsed()) return cmd_sweep(sweep_opts);
        if (val->parsed()) return cmd_validate(val_opts, trials);
        if (rat->parsed()) return cmd_rates(dimensions, qber_max, steps, rates_out);
        if (apparatus->parsed()) {
            if (load_path.empty() && app_opts.config_path.empty())
                throw Error(ErrorCode::config_error,
                            "apparatus needs --config or --load");
            return cmd_apparatus(app_opts, load_path);
        }
    } catch (const Error& e) {
        std::cout << error_to_json(e, app.get_subcommands().front()->get_name())
                         .dump()
                  << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cout << json{{"code", "internal"}, {"message", e.what()},
                          {"context", ""}}
                         .dump()
                  << "\n";
        return 1;
    }
    return 0;
}
