// Command-line front end: filter, backtest, diagnose, synth, dendro.
//
// Exit codes: 0 success, 2 invalid configuration, 3 data error (unreadable
// content, degenerate data), 4 numerical failure, 5 file I/O failure.

#include <bahc.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;
constexpr int kExitIo = 5;

class IoFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoFailure("cannot open '" + path + "' for reading");
    }
    return in;
}

/// Writes through a temporary buffer so that a failing command leaves no
/// partial file behind. "-" means stdout.
void write_output(const std::string& path, const std::string& content) {
    if (path == "-") {
        std::cout << content;
        std::cout.flush();
        return;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out || !(out << content) || !out.flush()) {
        throw IoFailure("cannot write '" + path + "'");
    }
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream stream(text);
    std::string item;
    while (std::getline(stream, item, ',')) {
        item = bahc::detail::trim(item);
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

std::vector<double> parse_levels(const std::string& text) {
    std::vector<double> out;
    for (const auto& item : split_list(text)) {
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw bahc::ConfigError("cannot parse correlation level '" + item + "'");
        }
    }
    return out;
}

std::vector<std::size_t> parse_sizes(const std::string& text, const std::string& what) {
    std::vector<std::size_t> out;
    for (const auto& item : split_list(text)) {
        try {
            std::size_t used = 0;
            const unsigned long long v = std::stoull(item, &used);
            if (used != item.size()) {
                throw std::invalid_argument(item);
            }
            out.push_back(static_cast<std::size_t>(v));
        } catch (const std::exception&) {
            throw bahc::ConfigError("cannot parse " + what + " '" + item + "'");
        }
    }
    return out;
}

struct MethodOptions {
    std::size_t bootstraps = bahc::kDefaultBootstraps;
    std::uint64_t seed = 0;
    std::size_t folds = bahc::kDefaultFolds;

    [[nodiscard]] bahc::FilterMethod make(const std::string& name) const {
        return bahc::FilterMethod{bahc::parse_filter_kind(name), bootstraps, seed, folds};
    }

    void attach(CLI::App& cmd) {
        cmd.add_option("--m", bootstraps, "Number of bootstrap copies (BAHC)")->capture_default_str();
        cmd.add_option("--seed", seed, "Random seed")->capture_default_str();
        cmd.add_option("--folds", folds, "Cross-validation folds (CV)")->capture_default_str();
    }
};

enum class InputKind { Returns, Prices, Matrix };

InputKind parse_input_kind(const std::string& name) {
    if (name == "returns") return InputKind::Returns;
    if (name == "prices") return InputKind::Prices;
    if (name == "matrix") return InputKind::Matrix;
    throw bahc::ConfigError("unknown input kind '" + name + "' (expected returns, prices or matrix)");
}

bahc::ReturnsMatrix load_returns(const std::string& path, InputKind kind) {
    auto in = open_input(path);
    const bahc::WideTable table = bahc::read_wide_csv(in);
    if (kind == InputKind::Prices) {
        return bahc::prices_to_returns(bahc::price_series_from_table(table));
    }
    std::vector<std::string> dropped;
    bahc::ReturnsMatrix returns = bahc::returns_from_table(table, &dropped);
    for (const auto& label : dropped) {
        std::cerr << "dropping '" << label << "': missing values\n";
    }
    return returns;
}

std::string matrix_csv(const bahc::Matrix& m, const std::vector<std::string>& labels, int precision) {
    std::ostringstream out;
    bahc::write_matrix_csv(out, m, labels, precision);
    return out.str();
}

// ---------------------------------------------------------------------------

struct FilterCommand {
    std::string input;
    std::string input_kind = "returns";
    std::string method = "bahc";
    MethodOptions options;
    std::string corr_out;
    std::string cov_out;
    int precision = 15;
    std::size_t threads = 1;

    void attach(CLI::App& app) {
        auto* cmd = app.add_subcommand("filter", "Filter a correlation/covariance estimate");
        cmd->add_option("input", input, "Returns or prices CSV (dates x tickers), or a correlation matrix CSV")
            ->required();
        cmd->add_option("--input-kind", input_kind, "returns, prices or matrix")->capture_default_str();
        cmd->add_option("--method", method, "sample, hcal, bahc, lw or cv")->capture_default_str();
        options.attach(*cmd);
        cmd->add_option("--corr-out", corr_out, "Filtered correlation CSV (default stdout when no output is set)");
        cmd->add_option("--cov-out", cov_out, "Filtered covariance CSV");
        cmd->add_option("--precision", precision, "Significant digits in CSV output")->capture_default_str();
        cmd->add_option("--threads", threads, "Worker threads")->capture_default_str();
        cmd->callback([this] { run(); });
    }

    void run() const {
        const InputKind kind = parse_input_kind(input_kind);
        const bahc::FilterMethod filter = options.make(method);
        if (kind == InputKind::Matrix) {
            run_on_matrix(filter);
            return;
        }
        const bahc::ReturnsMatrix returns = load_returns(input, kind);
        const bahc::FilteredEstimate estimate = bahc::apply_filter(filter, returns, threads);
        const bahc::CorrelationMatrix raw_corr = bahc::sample_correlation(returns);
        const bahc::CovarianceMatrix raw_cov = bahc::sample_covariance(returns);
        std::fprintf(stderr, "method=%s n=%ld t=%ld\n", filter.label().c_str(), static_cast<long>(returns.objects()),
                     static_cast<long>(returns.features()));
        std::fprintf(stderr, "correlation: min eigenvalue %.12g, frobenius distance to sample %.12g\n",
                     bahc::min_eigenvalue(estimate.correlation),
                     bahc::frobenius_corr(estimate.correlation - raw_corr));
        std::fprintf(stderr, "covariance: min eigenvalue %.12g, frobenius distance to sample %.12g\n",
                     bahc::min_eigenvalue(estimate.covariance),
                     bahc::frobenius_cov(estimate.covariance - raw_cov));
        const bool to_stdout = corr_out.empty() && cov_out.empty();
        if (to_stdout || !corr_out.empty()) {
            write_output(to_stdout ? "-" : corr_out, matrix_csv(estimate.correlation, returns.labels(), precision));
        }
        if (!cov_out.empty()) {
            write_output(cov_out, matrix_csv(estimate.covariance, returns.labels(), precision));
        }
    }

    void run_on_matrix(const bahc::FilterMethod& filter) const {
        if (filter.kind != bahc::FilterKind::HCAL && filter.kind != bahc::FilterKind::Sample) {
            throw bahc::ConfigError("matrix input supports only --method hcal or sample");
        }
        if (!cov_out.empty()) {
            throw bahc::ConfigError("matrix input produces a correlation matrix only");
        }
        auto in = open_input(input);
        const bahc::LabelledMatrix m = bahc::read_matrix_csv(in);
        const bahc::CorrelationMatrix corr = bahc::renormalize_correlation(m.values);
        const bahc::CorrelationMatrix filtered =
            filter.kind == bahc::FilterKind::HCAL ? bahc::hcal_filter(corr) : corr;
        std::fprintf(stderr, "correlation: min eigenvalue %.12g, frobenius distance to input %.12g\n",
                     bahc::min_eigenvalue(filtered), bahc::frobenius_corr(filtered - corr));
        write_output(corr_out.empty() ? "-" : corr_out, matrix_csv(filtered, m.labels, precision));
    }
};

// ---------------------------------------------------------------------------

struct BacktestCommand {
    std::string input;
    bool synthetic = false;
    std::string rho_levels = "0.6,0.4,0.2";
    double volatility = 0.01;
    std::string t_in = "50,100,200";
    std::size_t t_out = bahc::kDefaultTestLength;
    std::size_t n_assets = bahc::kDefaultAssets;
    std::size_t n_sims = 100;
    std::uint64_t seed = 0;
    std::string methods = "sample,hcal,bahc,lw,cv";
    std::string metrics;
    MethodOptions options;
    std::string earliest_test_date;
    std::string out_dir = ".";
    std::size_t threads = 1;

    void attach(CLI::App& app) {
        auto* cmd = app.add_subcommand("backtest", "Windowed minimum-variance and spectral experiments");
        cmd->add_option("--input", input, "Prices CSV (dates x tickers, empty cells for gaps)");
        cmd->add_flag("--synthetic", synthetic, "Use nested-block synthetic data instead of --input");
        cmd->add_option("--rho-levels", rho_levels, "Synthetic block correlations, finest first")->capture_default_str();
        cmd->add_option("--volatility", volatility, "Synthetic per-step volatility")->capture_default_str();
        cmd->add_option("--t-in", t_in, "Comma-separated calibration lengths")->capture_default_str();
        cmd->add_option("--t-out", t_out, "Test window length")->capture_default_str();
        cmd->add_option("--n-assets", n_assets, "Assets per simulation")->capture_default_str();
        cmd->add_option("--n-sims", n_sims, "Simulations per calibration length")->capture_default_str();
        cmd->add_option("--sim-seed", seed, "Seed for windows, asset selection and synthetic data")
            ->capture_default_str();
        cmd->add_option("--methods", methods, "Comma-separated filters")->capture_default_str();
        cmd->add_option("--metrics", metrics, "Comma-separated metrics (default: all)");
        options.attach(*cmd);
        cmd->add_option("--earliest-test-date", earliest_test_date,
                        "No test window may start before this date label");
        cmd->add_option("--out-dir", out_dir, "Directory for records.ndjson, summary.csv, winfrac.csv")
            ->capture_default_str();
        cmd->add_option("--threads", threads, "Worker threads")->capture_default_str();
        cmd->callback([this] { run(); });
    }

    void run() const {
        if (synthetic == !input.empty()) {
            throw bahc::ConfigError("backtest needs exactly one of --input or --synthetic");
        }
        bahc::SimulationSpec spec;
        spec.t_out = t_out;
        spec.n_assets = n_assets;
        spec.n_sims = n_sims;
        spec.seed = seed;
        spec.threads = std::max<std::size_t>(threads, 1);
        for (const auto& name : split_list(methods)) {
            spec.methods.push_back(options.make(name));
        }
        if (!metrics.empty()) {
            spec.metrics.clear();
            for (const auto& name : split_list(metrics)) {
                spec.metrics.push_back(bahc::parse_metric(name));
            }
        }
        const auto t_values = parse_sizes(t_in, "calibration length");
        if (t_values.empty()) {
            throw bahc::ConfigError("--t-in needs at least one value");
        }

        bahc::DataSource source = bahc::SyntheticSource{parse_levels(rho_levels), volatility};
        if (!synthetic) {
            auto in = open_input(input);
            const bahc::PriceSeries series = bahc::price_series_from_table(bahc::read_wide_csv(in));
            if (!earliest_test_date.empty()) {
                const auto it = std::find(series.dates.begin(), series.dates.end(), earliest_test_date);
                if (it == series.dates.end()) {
                    throw bahc::ConfigError("date '" + earliest_test_date + "' not found in input");
                }
                // Returns are indexed by their closing date minus one.
                const auto position = static_cast<std::size_t>(it - series.dates.begin());
                spec.earliest_test_start = position == 0 ? 0 : position - 1;
            }
            source = bahc::PanelSource::from_prices(series);
        }

        std::vector<bahc::ExperimentRecord> records;
        for (std::size_t t : t_values) {
            spec.t_in = t;
            auto batch = bahc::run_experiment(spec, source);
            std::move(batch.begin(), batch.end(), std::back_inserter(records));
        }

        std::filesystem::create_directories(out_dir);
        const std::filesystem::path dir(out_dir);
        std::ostringstream raw;
        bahc::write_records(raw, records);
        write_output((dir / "records.ndjson").string(), raw.str());
        std::ostringstream summary;
        bahc::write_summary_csv(summary, bahc::summarize(records));
        write_output((dir / "summary.csv").string(), summary.str());
        std::ostringstream wins;
        bahc::write_win_fraction_csv(wins, bahc::win_fractions(records));
        write_output((dir / "winfrac.csv").string(), wins.str());

        std::size_t na = 0;
        for (const auto& r : records) {
            na += r.value ? 0 : 1;
        }
        std::fprintf(stderr, "%zu records (%zu NA) written to %s\n", records.size(), na, out_dir.c_str());
    }
};

// ---------------------------------------------------------------------------

struct DiagnoseCommand {
    std::string input;
    std::string input_kind = "returns";
    std::size_t t_in = 0;
    std::size_t t_out = 0;
    std::string methods = "sample,hcal,bahc,lw,cv";
    MethodOptions options;
    std::string output = "-";

    void attach(CLI::App& app) {
        auto* cmd = app.add_subcommand("diagnose", "Oracle, residue and distance metrics for one in/out split");
        cmd->add_option("input", input, "Returns or prices CSV (dates x tickers)")->required();
        cmd->add_option("--input-kind", input_kind, "returns or prices")->capture_default_str();
        cmd->add_option("--t-in", t_in, "Calibration length (leading observations)")->required();
        cmd->add_option("--t-out", t_out, "Test length (default: all remaining observations)");
        cmd->add_option("--methods", methods, "Comma-separated filters")->capture_default_str();
        options.attach(*cmd);
        cmd->add_option("--output", output, "JSON output path ('-' for stdout)")->capture_default_str();
        cmd->callback([this] { run(); });
    }

    void run() const {
        const InputKind kind = parse_input_kind(input_kind);
        if (kind == InputKind::Matrix) {
            throw bahc::ConfigError("diagnose needs returns or prices");
        }
        const bahc::ReturnsMatrix returns = load_returns(input, kind);
        const auto total = static_cast<std::size_t>(returns.features());
        const std::size_t test = t_out == 0 ? (total > t_in ? total - t_in : 0) : t_out;
        if (t_in < 2 || test < 2 || t_in + test > total) {
            throw bahc::ConfigError("split t_in=" + std::to_string(t_in) + ", t_out=" + std::to_string(test) +
                                    " does not fit " + std::to_string(total) + " observations");
        }
        bahc::SimulationSpec spec;
        spec.t_in = t_in;
        spec.t_out = test;
        spec.n_assets = static_cast<std::size_t>(returns.objects());
        for (const auto& name : split_list(methods)) {
            spec.methods.push_back(options.make(name));
        }
        spec.validate();
        std::vector<std::size_t> assets(spec.n_assets);
        for (std::size_t i = 0; i < assets.size(); ++i) {
            assets[i] = i;
        }
        const bahc::Matrix& data = returns.data();
        const bahc::Window window{0, assets,
                                  bahc::ReturnsMatrix(data.leftCols(static_cast<bahc::Index>(t_in)), returns.labels()),
                                  bahc::ReturnsMatrix(data.middleCols(static_cast<bahc::Index>(t_in),
                                                                      static_cast<bahc::Index>(test)),
                                                      returns.labels())};
        const auto labels = bahc::method_labels(spec.methods);
        const auto records = bahc::detail::evaluate_window(spec, labels, window, 0);

        nlohmann::ordered_json result;
        result["n"] = spec.n_assets;
        result["t_in"] = t_in;
        result["t_out"] = test;
        nlohmann::ordered_json per_method = nlohmann::ordered_json::object();
        for (const auto& r : records) {
            if (r.value) {
                per_method[r.method][r.metric] = *r.value;
            } else {
                per_method[r.method][r.metric] = nullptr;
                per_method[r.method]["na_reasons"][r.metric] = r.note;
            }
        }
        result["methods"] = per_method;
        write_output(output, result.dump(2) + "\n");
    }
};

// ---------------------------------------------------------------------------

struct SynthCommand {
    std::size_t n = 100;
    std::size_t t = 1000;
    std::string rho_levels = "0.6,0.4,0.2";
    std::uint64_t seed = 0;
    double volatility = 0.01;
    std::string as = "prices";
    std::string output = "-";
    std::string truth_out;

    void attach(CLI::App& app) {
        auto* cmd = app.add_subcommand("synth", "Generate nested-block synthetic data");
        cmd->add_option("--n", n, "Number of series")->capture_default_str();
        cmd->add_option("--t", t, "Number of returns per series")->capture_default_str();
        cmd->add_option("--rho-levels", rho_levels, "Block correlations, finest first")->capture_default_str();
        cmd->add_option("--seed", seed, "Random seed")->capture_default_str();
        cmd->add_option("--volatility", volatility, "Per-step volatility")->capture_default_str();
        cmd->add_option("--as", as, "prices or returns")->capture_default_str();
        cmd->add_option("--output", output, "CSV output path ('-' for stdout)")->capture_default_str();
        cmd->add_option("--truth-out", truth_out, "Write the population correlation matrix here");
        cmd->callback([this] { run(); });
    }

    void run() const {
        const auto levels = parse_levels(rho_levels);
        if (as != "prices" && as != "returns") {
            throw bahc::ConfigError("--as must be prices or returns");
        }
        const auto data = bahc::synth_hierarchical(n, t, levels.size(), levels, seed, volatility);
        std::ostringstream out;
        if (as == "prices") {
            const bahc::PriceSeries series = bahc::compound_prices(data.returns);
            bahc::write_wide_csv(out, bahc::WideTable{series.dates, series.tickers, series.prices.transpose()});
        } else {
            std::vector<std::string> dates;
            for (std::size_t k = 1; k <= t; ++k) {
                dates.push_back(std::to_string(k));
            }
            bahc::write_wide_csv(out, bahc::WideTable{dates, data.returns.labels(), data.returns.data().transpose()});
        }
        write_output(output, out.str());
        if (!truth_out.empty()) {
            write_output(truth_out, matrix_csv(data.true_correlation, data.returns.labels(), 17));
        }
    }
};

// ---------------------------------------------------------------------------

struct DendroCommand {
    std::string input;
    std::string input_kind = "returns";
    std::string linkage_out = "-";
    std::string cophenetic_out;

    void attach(CLI::App& app) {
        auto* cmd = app.add_subcommand("dendro", "Average-linkage dendrogram and cophenetic matrix");
        cmd->add_option("input", input, "Returns/prices CSV or correlation matrix CSV")->required();
        cmd->add_option("--input-kind", input_kind, "returns, prices or matrix")->capture_default_str();
        cmd->add_option("--linkage-out", linkage_out, "Linkage table path ('-' for stdout)")->capture_default_str();
        cmd->add_option("--cophenetic-out", cophenetic_out, "Cophenetic distance matrix CSV");
        cmd->callback([this] { run(); });
    }

    void run() const {
        const InputKind kind = parse_input_kind(input_kind);
        bahc::CorrelationMatrix corr;
        std::vector<std::string> labels;
        if (kind == InputKind::Matrix) {
            auto in = open_input(input);
            auto m = bahc::read_matrix_csv(in);
            corr = bahc::renormalize_correlation(m.values);
            labels = std::move(m.labels);
        } else {
            const bahc::ReturnsMatrix returns = load_returns(input, kind);
            corr = bahc::sample_correlation(returns);
            labels = returns.labels();
        }
        const bahc::Dendrogram dendrogram = bahc::average_linkage(bahc::correlation_to_distance(corr));
        std::ostringstream table;
        bahc::write_linkage_table(table, dendrogram);
        write_output(linkage_out, table.str());
        if (!cophenetic_out.empty()) {
            write_output(cophenetic_out, matrix_csv(bahc::cophenetic_matrix(dendrogram), labels, 17));
        }
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bootstrapped average hierarchical clustering filters and experiments"};
    app.set_config("--config", "", "TOML-style key = value configuration file; flags override it");
    app.require_subcommand(1);

    FilterCommand filter;
    BacktestCommand backtest;
    DiagnoseCommand diagnose;
    SynthCommand synth;
    DendroCommand dendro;
    filter.attach(app);
    backtest.attach(app);
    diagnose.attach(app);
    synth.attach(app);
    dendro.attach(app);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    } catch (const IoFailure& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const bahc::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        switch (e.kind()) {
            case bahc::ErrorKind::Config: return kExitConfig;
            case bahc::ErrorKind::Data: return kExitData;
            case bahc::ErrorKind::Numerical: return kExitNumerical;
        }
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
    return 0;
}
