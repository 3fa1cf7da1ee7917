// Command-line runner: builds a problem from a LIBSVM file or a synthetic
// spec, runs one selection strategy (or compares several) and writes traces.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <bcd/engine.hpp>
#include <bcd/problems.hpp>
#include <bcd/selection.hpp>
#include <bcd/sparse_data.hpp>
#include <bcd/updates.hpp>

namespace {

constexpr int exit_usage = 2;
constexpr int exit_numerical = 3;

struct Config
{
    std::string problem = "lasso";
    std::string data_path;
    std::string synthetic;
    double lambda = 0.0;
    std::string strategy = "b_max_r";
    double epsilon = 0.5;
    std::string bin_size = "d/2";
    std::string update;
    double epochs = 10.0;
    std::uint64_t seed = 0;
    std::string normalize = "auto";
    std::string trace_path;
    std::size_t trace_every = 0;
    bool audit = false;
    std::optional<double> target_gap;
    std::optional<double> f_star;
    // compare only
    std::vector<std::string> strategies;
    std::string compare_out;
    double ref_tol = 1e-9;
};

bcd::SyntheticSpec parse_synthetic(const std::string& text)
{
    bcd::SyntheticSpec spec;
    bool have_n = false, have_d = false;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw bcd::argument_error("synthetic: expected key=value, got '" + item + "'");
        const auto key = item.substr(0, eq);
        const auto value = item.substr(eq + 1);
        double num = 0.0;
        if (!bcd::detail::parse_double(value, num)) {
            throw bcd::argument_error("synthetic: bad value for '" + key + "'");
        }
        auto as_count = [&] {
            if (num < 0.0 || num != std::floor(num)) {
                throw bcd::argument_error("synthetic: '" + key + "' must be a nonnegative integer");
            }
            return static_cast<std::size_t>(num);
        };
        if (key == "n") {
            spec.n = as_count();
            have_n = true;
        } else if (key == "d") {
            spec.d = as_count();
            have_d = true;
        } else if (key == "sparsity") {
            spec.sparsity = num;
        } else if (key == "signal") {
            spec.nnz_signal = as_count();
        } else if (key == "noise") {
            spec.noise_sd = num;
        } else if (key == "decay") {
            spec.signal_decay = num;
        } else {
            throw bcd::argument_error("synthetic: unknown key '" + key + "'");
        }
    }
    if (!have_n || !have_d) throw bcd::argument_error("synthetic: n and d are required");
    return spec;
}

bcd::LabeledDataset load_data(const Config& cfg)
{
    const bool logistic = cfg.problem == "logistic_l1";
    bcd::LabeledDataset data;
    if (!cfg.data_path.empty()) {
        data = bcd::load_libsvm(cfg.data_path, logistic);
    } else {
        data = bcd::generate_synthetic(parse_synthetic(cfg.synthetic), cfg.seed);
        if (logistic) data = bcd::to_binary_labels(std::move(data));
    }
    std::string mode = cfg.normalize;
    // the logistic shrinkage rule is exact for columns with squared norm n
    if (mode == "auto") mode = logistic ? "rms" : "none";
    if (mode == "unit" || mode == "rms") {
        const double target = mode == "unit" ? 1.0 : static_cast<double>(data.matrix.rows());
        auto scaled = bcd::rescale_columns(data.matrix, target);
        if (!scaled.dropped.empty()) {
            std::cerr << "note: dropped " << scaled.dropped.size() << " all-zero column(s)\n";
        }
        data.matrix = std::move(scaled.matrix);
    } else if (mode != "none") {
        throw bcd::argument_error("unknown normalization '" + cfg.normalize + "'");
    }
    return data;
}

bcd::StrategyConfig strategy_config(const std::string& name, const Config& cfg, std::size_t d)
{
    bcd::StrategyConfig sc;
    sc.kind = bcd::parse_strategy(name);
    sc.epsilon = cfg.epsilon;
    if (cfg.bin_size == "d/2") {
        sc.bin_size = bcd::default_bin_size(d);
    } else {
        std::size_t e = 0;
        if (!bcd::detail::parse_index(cfg.bin_size, e) || e == 0) {
            throw bcd::argument_error("--bin-size must be a positive integer or 'd/2'");
        }
        sc.bin_size = e;
    }
    return sc;
}

bcd::RunOptions run_options(const Config& cfg, const std::string& strategy, std::size_t d)
{
    bcd::RunOptions opt;
    opt.strategy = strategy_config(strategy, cfg, d);
    if (!cfg.update.empty()) opt.rule = bcd::parse_update_rule(cfg.update);
    opt.epochs = cfg.epochs;
    opt.seed = cfg.seed;
    opt.trace_every = cfg.trace_every;
    opt.f_star = cfg.f_star;
    opt.target_gap = cfg.target_gap;
    opt.audit = cfg.audit;
    return opt;
}

void write_trace(std::ostream& out, const std::vector<bcd::TraceRecord>& trace)
{
    using bcd::detail::format_double;
    out << "t,epoch,F,gap,subopt,eta,elapsed_s,col_passes,gap_evals\n";
    for (const auto& r : trace) {
        out << r.t << ',' << format_double(r.epoch) << ',' << format_double(r.objective) << ','
            << format_double(r.gap) << ',' << format_double(r.subopt) << ','
            << format_double(r.eta) << ',' << format_double(r.elapsed_s) << ','
            << r.counters.col_passes << ',' << r.counters.gap_evals << '\n';
    }
}

std::string default_trace_path(const Config& cfg)
{
    if (!cfg.trace_path.empty()) return cfg.trace_path;
    const char* dir = std::getenv("BCD_TRACE_DIR");
    if (dir == nullptr || *dir == '\0') return {};
    const auto name = cfg.problem + "_" + cfg.strategy + "_seed" + std::to_string(cfg.seed) + ".csv";
    return (std::filesystem::path(dir) / name).string();
}

template <class P>
int run_single(const P& p, const Config& cfg)
{
    const auto result = bcd::run(p, run_options(cfg, cfg.strategy, p.dim()));
    const auto path = default_trace_path(cfg);
    if (!path.empty()) {
        std::ofstream out(path);
        if (!out) throw bcd::argument_error("cannot write trace file '" + path + "'");
        write_trace(out, result.trace);
    }
    const auto& last = result.trace.back();
    std::cout << "problem=" << bcd::to_string(P::kind) << " strategy=" << cfg.strategy
              << " rule=" << bcd::to_string(result.rule_used)
              << (result.rule_fell_back ? " (fallback: class-H preflight failed)" : "")
              << " F=" << bcd::detail::format_double(last.objective)
              << " G=" << bcd::detail::format_double(last.gap)
              << " subopt=" << bcd::detail::format_double(last.subopt)
              << (last.subopt_from_reference ? " (vs F*)" : " (gap bound)")
              << " epochs=" << bcd::detail::format_double(last.epoch) << " eta_max="
              << bcd::detail::format_double(last.eta_running_max) << " time_s=" << std::fixed
              << std::setprecision(3) << result.elapsed_s << '\n';
    if (cfg.audit) {
        std::cout << std::defaultfloat << "audit: steps=" << result.audit.steps
                  << " bound_violations=" << result.audit.bound_violations
                  << " monotone_violations=" << result.audit.monotone_violations
                  << " worst_margin=" << result.audit.worst_bound_margin << '\n';
    }
    return 0;
}

template <class P>
int run_compare(const P& p, const Config& cfg)
{
    const std::vector<std::pair<std::string, double>> targets = {
        {"1e-1", 1e-1}, {"1e-2", 1e-2}, {"1e-3", 1e-3}, {"exp(-5)", std::exp(-5.0)}};

    double f_star = 0.0;
    if (cfg.f_star) {
        f_star = *cfg.f_star;
    } else {
        const auto ref = bcd::reference_optimum(p, cfg.ref_tol);
        f_star = ref.f_star;
        std::cout << "reference: F*=" << bcd::detail::format_double(ref.f_star)
                  << " gap=" << bcd::detail::format_double(ref.gap) << '\n';
    }

    struct Row
    {
        std::string strategy;
        std::string failure;
        std::vector<std::optional<bcd::TargetHit>> hits;
    };
    std::vector<Row> rows;
    auto names = cfg.strategies;
    if (names.empty()) names = {"uniform", "ada_gap", "gap_per_epoch", "max_r", "b_max_r"};
    for (const auto& name : names) {
        Row row{name, {}, {}};
        try {
            auto opt = run_options(cfg, name, p.dim());
            opt.f_star = f_star;
            opt.target_gap.reset();
            for (const auto& t : targets) opt.targets.push_back(t.second);
            row.hits = bcd::run(p, opt).hits;
        } catch (const std::exception& e) {
            row.failure = e.what();
        }
        rows.push_back(std::move(row));
    }

    if (!cfg.compare_out.empty()) {
        std::ofstream out(cfg.compare_out);
        if (!out) throw bcd::argument_error("cannot write '" + cfg.compare_out + "'");
        out << "strategy,target,reached,epoch,elapsed_s\n";
        for (const auto& row : rows) {
            for (std::size_t k = 0; k < targets.size(); ++k) {
                out << row.strategy << ',' << bcd::detail::format_double(targets[k].second) << ',';
                if (!row.failure.empty()) {
                    out << "failed,,\n";
                } else if (row.hits[k]) {
                    out << "yes," << bcd::detail::format_double(row.hits[k]->epoch) << ','
                        << bcd::detail::format_double(row.hits[k]->elapsed_s) << '\n';
                } else {
                    out << "no,,\n";
                }
            }
        }
    }

    std::cout << std::left << std::setw(16) << "strategy";
    for (const auto& t : targets) std::cout << std::setw(14) << t.first;
    std::cout << "(epochs to F - F* <= target)\n";
    for (const auto& row : rows) {
        std::cout << std::setw(16) << row.strategy;
        if (!row.failure.empty()) {
            std::cout << "FAILED: " << row.failure << '\n';
            continue;
        }
        for (const auto& hit : row.hits) {
            std::ostringstream cell;
            if (hit) {
                cell << std::fixed << std::setprecision(2) << hit->epoch;
            } else {
                cell << "—";
            }
            // the dash is three bytes but one column wide
            const std::size_t width = hit ? cell.str().size() : 1;
            std::cout << cell.str() << std::string(width < 14 ? 14 - width : 1, ' ');
        }
        std::cout << '\n';
    }
    return 0;
}

template <class P>
int dispatch(const P& p, const Config& cfg, bool compare)
{
    return compare ? run_compare(p, cfg) : run_single(p, cfg);
}

int execute(const Config& cfg, bool compare)
{
    if (cfg.data_path.empty() == cfg.synthetic.empty()) {
        throw bcd::argument_error("exactly one of --data and --synthetic is required");
    }
    auto data = load_data(cfg);
    if (cfg.problem == "lasso") return dispatch(bcd::make_lasso(std::move(data), cfg.lambda), cfg, compare);
    if (cfg.problem == "logistic_l1") {
        return dispatch(bcd::make_logistic_l1(std::move(data), cfg.lambda), cfg, compare);
    }
    if (cfg.problem == "ridge_dual") return dispatch(bcd::make_ridge_dual(data, cfg.lambda), cfg, compare);
    throw bcd::argument_error("unknown problem '" + cfg.problem + "'");
}

} // namespace

int main(int argc, char** argv)
{
    Config cfg;
    CLI::App app{"Coordinate descent with gap-based coordinate selection"};
    app.fallthrough();

    app.add_option("--problem", cfg.problem, "lasso | logistic_l1 | ridge_dual")
        ->check(CLI::IsMember({"lasso", "logistic_l1", "ridge_dual"}));
    app.add_option("--data", cfg.data_path, "LIBSVM file")->check(CLI::ExistingFile);
    app.add_option("--synthetic", cfg.synthetic, "n=,d=,sparsity=,signal=,noise=[,decay=]");
    app.add_option("--lambda", cfg.lambda, "regularization strength (> 0)")->required();
    app.add_option("--strategy", cfg.strategy, "uniform | ada_gap | gap_per_epoch | gs | max_r | b_max_r");
    app.add_option("--epsilon", cfg.epsilon, "b_max_r exploration probability")->check(CLI::Range(0.0, 1.0));
    app.add_option("--bin-size", cfg.bin_size, "iterations between full score refreshes, or 'd/2'");
    app.add_option("--update", cfg.update, "reference | lasso_prox | logistic_shrink | ridge_exact");
    app.add_option("--epochs", cfg.epochs, "epochs (d iterations each)")->check(CLI::PositiveNumber);
    app.add_option("--seed", cfg.seed);
    app.add_option("--normalize", cfg.normalize, "auto | none | unit | rms")
        ->check(CLI::IsMember({"auto", "none", "unit", "rms"}));
    app.add_option("--trace", cfg.trace_path, "trace CSV path (default: $BCD_TRACE_DIR/...)");
    app.add_option("--trace-every", cfg.trace_every, "iterations between trace records (default d)");
    app.add_flag("--audit", cfg.audit, "check the per-step decrease bound against exact objectives");
    app.add_option("--target-gap", cfg.target_gap, "stop once the duality gap is at most this");
    app.add_option("--f-star", cfg.f_star, "reference optimum value for suboptimality");

    auto* compare = app.add_subcommand("compare", "run several strategies against a shared optimum");
    compare->add_option("--strategies", cfg.strategies, "strategies to compare")->delimiter(',');
    compare->add_option("--out", cfg.compare_out, "CSV output path");
    compare->add_option("--ref-tol", cfg.ref_tol, "duality gap tolerance of the reference optimum")
        ->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_usage;
    }

    try {
        return execute(cfg, compare->parsed());
    } catch (const bcd::numerical_error& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return exit_numerical;
    } catch (const bcd::budget_exceeded& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return exit_numerical;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return exit_usage;
    } catch (const bcd::parse_error& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return exit_usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
