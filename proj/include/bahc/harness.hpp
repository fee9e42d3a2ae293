#pragma once

// Experiment engine: price ingestion, nested-block synthetic data, random
// calibration/test windows, per-simulation metrics and their aggregation.

#include <bahc/baselines.hpp>
#include <bahc/error.hpp>
#include <bahc/io.hpp>
#include <bahc/matrix_core.hpp>
#include <bahc/parallel.hpp>
#include <bahc/portfolio.hpp>
#include <bahc/rng.hpp>
#include <bahc/spectral_diag.hpp>

#include <json.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace bahc {

// ---------------------------------------------------------------------------
// Prices and returns

/// n series by T+1 observations of strictly positive prices; NaN marks a gap.
struct PriceSeries {
    std::vector<std::string> dates;
    std::vector<std::string> tickers;
    Matrix prices;
};

namespace detail {

inline bool label_less(const std::string& a, const std::string& b) {
    double x = 0.0;
    double y = 0.0;
    const auto ra = std::from_chars(a.data(), a.data() + a.size(), x);
    const auto rb = std::from_chars(b.data(), b.data() + b.size(), y);
    if (ra.ec == std::errc() && ra.ptr == a.data() + a.size() && rb.ec == std::errc() &&
        rb.ptr == b.data() + b.size()) {
        return x < y;
    }
    return a < b;
}

}  // namespace detail

/// Validates positivity and strictly increasing date labels (numeric labels
/// compare as numbers, anything else lexicographically).
inline void validate(const PriceSeries& series) {
    if (series.prices.rows() != static_cast<Index>(series.tickers.size()) ||
        series.prices.cols() != static_cast<Index>(series.dates.size())) {
        throw DataError("price series labels do not match the price matrix shape");
    }
    for (std::size_t k = 1; k < series.dates.size(); ++k) {
        if (!detail::label_less(series.dates[k - 1], series.dates[k])) {
            throw DataError("dates are not strictly increasing at '" + series.dates[k] + "'");
        }
    }
    for (Index i = 0; i < series.prices.rows(); ++i) {
        for (Index k = 0; k < series.prices.cols(); ++k) {
            const double p = series.prices(i, k);
            if (!std::isnan(p) && !(p > 0.0)) {
                throw DataError("nonpositive price for '" + series.tickers[static_cast<std::size_t>(i)] + "' on " +
                                series.dates[static_cast<std::size_t>(k)]);
            }
        }
    }
}

inline PriceSeries price_series_from_table(const WideTable& table) {
    PriceSeries series{table.row_labels, table.column_labels, table.values.transpose()};
    validate(series);
    return series;
}

/// r_k = p_k / p_{k-1} - 1 per series; NaN wherever either price is missing.
inline Matrix return_panel(const PriceSeries& series) {
    validate(series);
    const Index n = series.prices.rows();
    const Index steps = series.prices.cols() - 1;
    if (steps < 1) {
        throw DataError("need at least two price observations");
    }
    Matrix out(n, steps);
    for (Index i = 0; i < n; ++i) {
        for (Index k = 0; k < steps; ++k) {
            out(i, k) = series.prices(i, k + 1) / series.prices(i, k) - 1.0;
        }
    }
    return out;
}

/// Returns of a gap-free price series.
inline ReturnsMatrix prices_to_returns(const PriceSeries& series) {
    Matrix panel = return_panel(series);
    if (!panel.allFinite()) {
        throw DataError("price series has missing values; use windowed sampling instead");
    }
    return ReturnsMatrix(std::move(panel), series.tickers);
}

/// Prices compounding from `start` through the given returns (dates 0..T).
inline PriceSeries compound_prices(const ReturnsMatrix& returns, double start = 100.0) {
    const Index n = returns.objects();
    const Index t = returns.features();
    PriceSeries out;
    out.tickers = returns.labels();
    out.prices.resize(n, t + 1);
    out.prices.col(0).setConstant(start);
    for (Index k = 0; k < t; ++k) {
        out.prices.col(k + 1) = out.prices.col(k).cwiseProduct((returns.data().col(k).array() + 1.0).matrix());
    }
    for (Index k = 0; k <= t; ++k) {
        out.dates.push_back(std::to_string(k));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Synthetic nested-block data

struct SyntheticData {
    ReturnsMatrix returns;
    CorrelationMatrix true_correlation;
};

/// Block index of object i at tree level `level` (level 0 holds everything;
/// level l splits the index range into 2^l balanced contiguous blocks).
inline std::size_t nested_block(std::size_t i, std::size_t level, std::size_t n) {
    return static_cast<std::size_t>((static_cast<unsigned __int128>(i) << level) / n);
}

inline void validate_levels(std::size_t n, const std::vector<double>& rho_levels) {
    if (rho_levels.empty()) {
        throw DataError("at least one correlation level is required");
    }
    for (std::size_t k = 0; k < rho_levels.size(); ++k) {
        if (!(rho_levels[k] >= 0.0 && rho_levels[k] < 1.0)) {
            throw DataError("correlation levels must lie in [0, 1)");
        }
        if (k > 0 && !(rho_levels[k] < rho_levels[k - 1])) {
            throw DataError("correlation levels must be strictly decreasing (finest block first)");
        }
    }
    if (rho_levels.size() > 62 || (std::size_t{1} << (rho_levels.size() - 1)) > n) {
        throw DataError("too many levels for " + std::to_string(n) + " objects");
    }
}

/// Population correlation of the nested-block model. rho_levels[0] is the
/// correlation inside the finest blocks, rho_levels[depth-1] the correlation
/// across the two top-level halves (or the whole set when depth = 1).
inline CorrelationMatrix nested_block_correlation(std::size_t n, const std::vector<double>& rho_levels) {
    validate_levels(n, rho_levels);
    const std::size_t depth = rho_levels.size();
    Matrix c = Matrix::Identity(static_cast<Index>(n), static_cast<Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            std::size_t shared = 0;
            while (shared + 1 < depth && nested_block(i, shared + 1, n) == nested_block(j, shared + 1, n)) {
                ++shared;
            }
            const double rho = rho_levels[depth - 1 - shared];
            c(static_cast<Index>(i), static_cast<Index>(j)) = rho;
            c(static_cast<Index>(j), static_cast<Index>(i)) = rho;
        }
    }
    return c;
}

/// Gaussian returns with exact nested-block population correlation, built
/// from one factor per block per level plus idiosyncratic noise, all scaled by
/// `volatility`.
inline SyntheticData synth_hierarchical(std::size_t n, std::size_t t, std::size_t depth,
                                        const std::vector<double>& rho_levels, std::uint64_t seed,
                                        double volatility = 1.0) {
    if (rho_levels.size() != depth) {
        throw DataError("expected " + std::to_string(depth) + " correlation levels");
    }
    CorrelationMatrix truth = nested_block_correlation(n, rho_levels);
    // Tree level l carries loading sqrt(r_l - r_{l-1}) with r_l the level's
    // correlation, increasing from the root.
    std::vector<double> loading(depth);
    double previous = 0.0;
    for (std::size_t level = 0; level < depth; ++level) {
        const double r = rho_levels[depth - 1 - level];
        loading[level] = std::sqrt(r - previous);
        previous = r;
    }
    const double idiosyncratic = std::sqrt(1.0 - previous);

    SplitMix64 rng(hash_words({seed, 0x73796e7468ULL}));
    Matrix data(static_cast<Index>(n), static_cast<Index>(t));
    std::vector<double> factors;
    for (std::size_t h = 0; h < t; ++h) {
        factors.clear();
        std::vector<std::size_t> offset(depth);
        for (std::size_t level = 0; level < depth; ++level) {
            offset[level] = factors.size();
            for (std::size_t b = 0; b < (std::size_t{1} << level); ++b) {
                factors.push_back(rng.normal());
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            double x = idiosyncratic * rng.normal();
            for (std::size_t level = 0; level < depth; ++level) {
                x += loading[level] * factors[offset[level] + nested_block(i, level, n)];
            }
            data(static_cast<Index>(i), static_cast<Index>(h)) = volatility * x;
        }
    }
    return {ReturnsMatrix(std::move(data)), std::move(truth)};
}

// ---------------------------------------------------------------------------
// Simulation protocol

enum class Metric {
    RealizedRiskLongShort,
    RealizedRiskLongOnly,
    FrobCorr,
    FrobCov,
    OracleStabilityCorr,
    OracleStabilityCov,
    EpsHigh,
    EpsLow,
};

inline constexpr std::array kAllMetrics{Metric::RealizedRiskLongShort, Metric::RealizedRiskLongOnly, Metric::FrobCorr,
                                        Metric::FrobCov, Metric::OracleStabilityCorr, Metric::OracleStabilityCov,
                                        Metric::EpsHigh, Metric::EpsLow};

inline std::string_view metric_name(Metric metric) {
    switch (metric) {
        case Metric::RealizedRiskLongShort: return "realized_risk_ls";
        case Metric::RealizedRiskLongOnly: return "realized_risk_lo";
        case Metric::FrobCorr: return "frob_corr";
        case Metric::FrobCov: return "frob_cov";
        case Metric::OracleStabilityCorr: return "oracle_stability_corr";
        case Metric::OracleStabilityCov: return "oracle_stability_cov";
        case Metric::EpsHigh: return "eps_hi";
        case Metric::EpsLow: return "eps_low";
    }
    return "?";
}

inline Metric parse_metric(std::string_view name) {
    for (Metric m : kAllMetrics) {
        if (metric_name(m) == name) {
            return m;
        }
    }
    throw ConfigError("unknown metric '" + std::string(name) + "'");
}

inline constexpr std::size_t kDefaultTestLength = 42;
inline constexpr std::size_t kDefaultAssets = 100;

struct SimulationSpec {
    std::size_t t_in = 0;
    std::size_t t_out = kDefaultTestLength;
    std::size_t n_assets = kDefaultAssets;
    std::size_t n_sims = 1;
    std::uint64_t seed = 0;
    std::vector<FilterMethod> methods;
    std::vector<Metric> metrics{kAllMetrics.begin(), kAllMetrics.end()};
    /// Index (into the return panel) before which no test window may start.
    std::size_t earliest_test_start = 0;
    std::size_t threads = 1;

    void validate() const {
        if (t_in < 2 || t_out < 2 || n_assets < 2) {
            throw ConfigError("t_in, t_out and n_assets must all be at least 2");
        }
        if (n_sims == 0) {
            throw ConfigError("n_sims must be positive");
        }
        if (methods.empty()) {
            throw ConfigError("at least one filter method is required");
        }
        if (metrics.empty()) {
            throw ConfigError("at least one metric is required");
        }
        for (const auto& m : methods) {
            m.validate();
        }
    }
};

struct Window {
    std::size_t start = 0;
    std::vector<std::size_t> assets;
    ReturnsMatrix in_sample;
    ReturnsMatrix out_of_sample;
};

/// Uniform random start among admissible days, then n_assets drawn without
/// replacement among series complete over both windows. Depends only on
/// (spec.seed, sim_id).
inline Window sample_window(const Matrix& panel, const std::vector<std::string>& tickers, const SimulationSpec& spec,
                            std::size_t sim_id) {
    const auto total = static_cast<std::size_t>(panel.cols());
    const std::size_t span = spec.t_in + spec.t_out;
    const std::size_t first = spec.earliest_test_start > spec.t_in ? spec.earliest_test_start - spec.t_in : 0;
    if (total < span || total - span < first) {
        throw DataError("history too short: " + std::to_string(total) + " returns for windows of " +
                        std::to_string(span));
    }
    SplitMix64 rng(hash_words({spec.seed, sim_id, 0x77696e646f77ULL}));
    const std::size_t start = first + static_cast<std::size_t>(rng.uniform_index(total - span - first + 1));

    std::vector<std::size_t> complete;
    for (Index i = 0; i < panel.rows(); ++i) {
        if (panel.row(i).segment(static_cast<Index>(start), static_cast<Index>(span)).allFinite()) {
            complete.push_back(static_cast<std::size_t>(i));
        }
    }
    if (complete.size() < spec.n_assets) {
        throw DataError("only " + std::to_string(complete.size()) + " complete series in window starting at " +
                        std::to_string(start) + ", need " + std::to_string(spec.n_assets));
    }
    std::vector<std::size_t> chosen;
    for (std::size_t k : sample_without_replacement(rng, complete.size(), spec.n_assets)) {
        chosen.push_back(complete[k]);
    }
    std::sort(chosen.begin(), chosen.end());

    const auto n = static_cast<Index>(chosen.size());
    Matrix in(n, static_cast<Index>(spec.t_in));
    Matrix out(n, static_cast<Index>(spec.t_out));
    std::vector<std::string> labels;
    for (Index r = 0; r < n; ++r) {
        const auto row = static_cast<Index>(chosen[static_cast<std::size_t>(r)]);
        in.row(r) = panel.row(row).segment(static_cast<Index>(start), static_cast<Index>(spec.t_in));
        out.row(r) = panel.row(row).segment(static_cast<Index>(start + spec.t_in), static_cast<Index>(spec.t_out));
        labels.push_back(tickers.empty() ? std::to_string(row) : tickers[static_cast<std::size_t>(row)]);
    }
    return Window{start, std::move(chosen), ReturnsMatrix(std::move(in), labels), ReturnsMatrix(std::move(out), labels)};
}

inline Window sample_window(const PriceSeries& series, const SimulationSpec& spec, std::size_t sim_id) {
    return sample_window(return_panel(series), series.tickers, spec, sim_id);
}

/// Historical panel source (returns with NaN gaps).
struct PanelSource {
    Matrix returns;
    std::vector<std::string> tickers;

    static PanelSource from_prices(const PriceSeries& series) { return {return_panel(series), series.tickers}; }
};

/// Fresh nested-block data per simulation, n = spec.n_assets objects.
struct SyntheticSource {
    std::vector<double> rho_levels{0.6, 0.4, 0.2};
    double volatility = 0.01;
};

using DataSource = std::variant<PanelSource, SyntheticSource>;

struct ExperimentRecord {
    std::size_t sim_id = 0;
    std::size_t t_in = 0;
    std::size_t window_start = 0;
    std::string method;
    std::string metric;
    std::optional<double> value;  // empty for NA
    std::string note;             // reason for NA

    friend bool operator==(const ExperimentRecord&, const ExperimentRecord&) = default;
};

/// Distinct labels for the methods of a spec; repeats get a "#k" suffix.
inline std::vector<std::string> method_labels(const std::vector<FilterMethod>& methods) {
    std::vector<std::string> out;
    std::map<std::string, std::size_t> seen;
    for (const auto& m : methods) {
        const std::string base = m.label();
        const std::size_t k = ++seen[base];
        out.push_back(k == 1 ? base : base + "#" + std::to_string(k));
    }
    return out;
}

namespace detail {

inline Window synthetic_window(const SyntheticSource& source, const SimulationSpec& spec, std::size_t sim_id) {
    const std::size_t depth = source.rho_levels.size();
    auto data = synth_hierarchical(spec.n_assets, spec.t_in + spec.t_out, depth, source.rho_levels,
                                   hash_words({spec.seed, sim_id, 0x73796e746865ULL}), source.volatility);
    const Matrix& all = data.returns.data();
    std::vector<std::size_t> assets(spec.n_assets);
    for (std::size_t i = 0; i < assets.size(); ++i) {
        assets[i] = i;
    }
    return Window{0, std::move(assets),
                  ReturnsMatrix(all.leftCols(static_cast<Index>(spec.t_in)), data.returns.labels()),
                  ReturnsMatrix(all.rightCols(static_cast<Index>(spec.t_out)), data.returns.labels())};
}

/// Per-method state shared by several metrics, computed lazily.
struct MethodContext {
    const FilteredEstimate& estimate;
    const CovarianceMatrix& cov_out;
    const CorrelationMatrix& corr_out;
    std::optional<EigenDecomposition> corr_basis;
    std::optional<EigenDecomposition> cov_basis;

    const EigenDecomposition& correlation_basis() {
        if (!corr_basis) {
            corr_basis = eigendecompose(estimate.correlation);
        }
        return *corr_basis;
    }
    const EigenDecomposition& covariance_basis() {
        if (!cov_basis) {
            cov_basis = eigendecompose(estimate.covariance);
        }
        return *cov_basis;
    }
};

inline double evaluate_metric(Metric metric, MethodContext& ctx) {
    switch (metric) {
        case Metric::RealizedRiskLongShort:
            return realized_risk(min_variance_long_short(ctx.estimate.covariance), ctx.cov_out);
        case Metric::RealizedRiskLongOnly:
            return realized_risk(min_variance_long_only(ctx.estimate.covariance), ctx.cov_out);
        case Metric::FrobCorr:
            return frobenius_corr(ctx.corr_out - ctx.estimate.correlation);
        case Metric::FrobCov:
            return frobenius_cov(ctx.cov_out - ctx.estimate.covariance);
        case Metric::OracleStabilityCorr:
            return eigenvector_stability(ctx.correlation_basis(), ctx.corr_out, MatrixMode::Correlation);
        case Metric::OracleStabilityCov:
            return eigenvector_stability(ctx.covariance_basis(), ctx.cov_out, MatrixMode::Covariance);
        case Metric::EpsHigh: {
            const auto& basis = ctx.correlation_basis();
            return residues(basis.eigenvalues, oracle(basis, ctx.corr_out).oracle_eigenvalues).high;
        }
        case Metric::EpsLow: {
            const auto& basis = ctx.correlation_basis();
            return residue_low(basis.eigenvalues, oracle(basis, ctx.corr_out).oracle_eigenvalues);
        }
    }
    throw ConfigError("unhandled metric");
}

/// Seed of a stochastic method for one simulation, so that simulations use
/// independent bootstraps and folds.
inline FilterMethod method_for_simulation(FilterMethod method, std::size_t sim_id) {
    method.seed = hash_words({method.seed, sim_id});
    return method;
}

/// Filters the window's calibration data with every method and evaluates each
/// metric against the test data. Failures become NA records.
inline std::vector<ExperimentRecord> evaluate_window(const SimulationSpec& spec, const std::vector<std::string>& labels,
                                                     const Window& window, std::size_t sim_id) {
    std::vector<ExperimentRecord> records;
    auto na_record = [&](std::size_t k, Metric metric, const std::string& why) {
        return ExperimentRecord{sim_id, spec.t_in, window.start, labels[k], std::string(metric_name(metric)),
                                std::nullopt, why};
    };
    CovarianceMatrix cov_out;
    CorrelationMatrix corr_out;
    try {
        cov_out = sample_covariance(window.out_of_sample);
        corr_out = sample_correlation(window.out_of_sample);
    } catch (const Error& e) {
        for (std::size_t k = 0; k < spec.methods.size(); ++k) {
            for (Metric metric : spec.metrics) {
                records.push_back(na_record(k, metric, e.what()));
            }
        }
        return records;
    }

    for (std::size_t k = 0; k < spec.methods.size(); ++k) {
        std::optional<FilteredEstimate> estimate;
        std::string failure;
        try {
            estimate.emplace(apply_filter(method_for_simulation(spec.methods[k], sim_id), window.in_sample));
        } catch (const Error& e) {
            failure = e.what();
        }
        if (!estimate) {
            for (Metric metric : spec.metrics) {
                records.push_back(na_record(k, metric, failure));
            }
            continue;
        }
        MethodContext ctx{*estimate, cov_out, corr_out, std::nullopt, std::nullopt};
        for (Metric metric : spec.metrics) {
            ExperimentRecord record = na_record(k, metric, "");
            try {
                const double value = evaluate_metric(metric, ctx);
                if (std::isfinite(value)) {
                    record.value = value;
                } else {
                    record.note = "non-finite value";
                }
            } catch (const Error& e) {
                record.note = e.what();
            }
            records.push_back(std::move(record));
        }
    }
    return records;
}

inline std::vector<ExperimentRecord> run_simulation(const SimulationSpec& spec, const DataSource& source,
                                                    const std::vector<std::string>& labels, std::size_t sim_id) {
    std::optional<Window> window;
    try {
        if (const auto* panel = std::get_if<PanelSource>(&source)) {
            window.emplace(sample_window(panel->returns, panel->tickers, spec, sim_id));
        } else {
            window.emplace(synthetic_window(std::get<SyntheticSource>(source), spec, sim_id));
        }
    } catch (const Error& e) {
        std::vector<ExperimentRecord> records;
        for (const auto& label : labels) {
            for (Metric metric : spec.metrics) {
                records.push_back({sim_id, spec.t_in, 0, label, std::string(metric_name(metric)), std::nullopt, e.what()});
            }
        }
        return records;
    }
    return evaluate_window(spec, labels, *window, sim_id);
}

}  // namespace detail

/// One record per (simulation, method, metric), NA records included, ordered
/// by sim_id then method then metric regardless of spec.threads.
inline std::vector<ExperimentRecord> run_experiment(const SimulationSpec& spec, const DataSource& source) {
    spec.validate();
    if (const auto* synthetic = std::get_if<SyntheticSource>(&source)) {
        validate_levels(spec.n_assets, synthetic->rho_levels);
    }
    const auto labels = method_labels(spec.methods);
    std::vector<std::vector<ExperimentRecord>> per_sim(spec.n_sims);
    parallel_for(spec.n_sims, spec.threads,
                 [&](std::size_t sim) { per_sim[sim] = detail::run_simulation(spec, source, labels, sim); });
    std::vector<ExperimentRecord> out;
    out.reserve(spec.n_sims * spec.methods.size() * spec.metrics.size());
    for (auto& batch : per_sim) {
        std::move(batch.begin(), batch.end(), std::back_inserter(out));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Aggregation and persistence

struct SummaryRow {
    std::size_t t_in = 0;
    std::string method;
    std::string metric;
    std::size_t count = 0;     // finite values
    std::size_t na_count = 0;
    std::optional<double> mean;
    std::optional<double> median;
};

struct WinFractionRow {
    std::size_t t_in = 0;
    std::string metric;
    std::string method;
    std::string opponent;
    std::size_t wins = 0;         // simulations where method < opponent strictly
    std::size_t comparisons = 0;  // simulations where both are available
    std::optional<double> fraction;
};

inline double median_of(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

/// Mean and median per (t_in, method, metric) in first-appearance order. NA
/// records are counted but excluded from the statistics.
inline std::vector<SummaryRow> summarize(const std::vector<ExperimentRecord>& records) {
    std::vector<SummaryRow> rows;
    std::map<std::tuple<std::size_t, std::string, std::string>, std::size_t> index;
    std::vector<std::vector<double>> values;
    for (const auto& r : records) {
        const auto key = std::make_tuple(r.t_in, r.method, r.metric);
        auto [it, inserted] = index.try_emplace(key, rows.size());
        if (inserted) {
            rows.push_back(SummaryRow{r.t_in, r.method, r.metric, 0, 0, std::nullopt, std::nullopt});
            values.emplace_back();
        }
        if (r.value) {
            values[it->second].push_back(*r.value);
        } else {
            ++rows[it->second].na_count;
        }
    }
    for (std::size_t k = 0; k < rows.size(); ++k) {
        rows[k].count = values[k].size();
        if (!values[k].empty()) {
            double sum = 0.0;
            for (double v : values[k]) {
                sum += v;
            }
            rows[k].mean = sum / static_cast<double>(values[k].size());
            rows[k].median = median_of(values[k]);
        }
    }
    return rows;
}

/// Win fraction of `method` against `opponent` on one metric at one t_in.
inline WinFractionRow win_fraction(const std::vector<ExperimentRecord>& records, std::size_t t_in,
                                   const std::string& metric, const std::string& method, const std::string& opponent) {
    std::map<std::size_t, double> mine;
    std::map<std::size_t, double> theirs;
    for (const auto& r : records) {
        if (r.t_in != t_in || r.metric != metric || !r.value) {
            continue;
        }
        if (r.method == method) {
            mine[r.sim_id] = *r.value;
        }
        if (r.method == opponent) {
            theirs[r.sim_id] = *r.value;
        }
    }
    WinFractionRow row{t_in, metric, method, opponent, 0, 0, std::nullopt};
    for (const auto& [sim, value] : mine) {
        const auto other = theirs.find(sim);
        if (other == theirs.end()) {
            continue;
        }
        ++row.comparisons;
        if (value < other->second) {
            ++row.wins;
        }
    }
    if (row.comparisons > 0) {
        row.fraction = static_cast<double>(row.wins) / static_cast<double>(row.comparisons);
    }
    return row;
}

/// All ordered pairs of distinct methods, per t_in and metric.
inline std::vector<WinFractionRow> win_fractions(const std::vector<ExperimentRecord>& records) {
    std::vector<std::size_t> t_values;
    std::vector<std::string> metrics;
    std::vector<std::string> methods;
    auto remember = [](auto& seen, const auto& value) {
        if (std::find(seen.begin(), seen.end(), value) == seen.end()) {
            seen.push_back(value);
        }
    };
    for (const auto& r : records) {
        remember(t_values, r.t_in);
        remember(metrics, r.metric);
        remember(methods, r.method);
    }
    std::vector<WinFractionRow> rows;
    for (std::size_t t : t_values) {
        for (const auto& metric : metrics) {
            for (const auto& a : methods) {
                for (const auto& b : methods) {
                    if (a != b) {
                        rows.push_back(win_fraction(records, t, metric, a, b));
                    }
                }
            }
        }
    }
    return rows;
}

inline nlohmann::ordered_json to_json(const ExperimentRecord& r) {
    nlohmann::ordered_json j;
    j["sim_id"] = r.sim_id;
    j["t_in"] = r.t_in;
    j["window_start"] = r.window_start;
    j["method"] = r.method;
    j["metric"] = r.metric;
    if (r.value) {
        j["value"] = *r.value;
    } else {
        j["value"] = nullptr;
        j["status"] = "NA";
        j["reason"] = r.note;
    }
    return j;
}

inline ExperimentRecord record_from_json(const nlohmann::json& j) {
    ExperimentRecord r;
    r.sim_id = j.at("sim_id").get<std::size_t>();
    r.t_in = j.at("t_in").get<std::size_t>();
    r.window_start = j.at("window_start").get<std::size_t>();
    r.method = j.at("method").get<std::string>();
    r.metric = j.at("metric").get<std::string>();
    if (!j.at("value").is_null()) {
        r.value = j.at("value").get<double>();
    } else {
        r.note = j.value("reason", "");
    }
    return r;
}

inline void write_records(std::ostream& out, const std::vector<ExperimentRecord>& records) {
    for (const auto& r : records) {
        out << to_json(r).dump() << '\n';
    }
}

inline std::vector<ExperimentRecord> read_records(std::istream& in) {
    std::vector<ExperimentRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) {
            out.push_back(record_from_json(nlohmann::json::parse(line)));
        }
    }
    return out;
}

namespace detail {

inline std::string optional_cell(const std::optional<double>& v) {
    return v ? format_double(*v, 17) : std::string("NA");
}

}  // namespace detail

inline void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
    out << "t_in,method,metric,count,na_count,mean,median\n";
    for (const auto& r : rows) {
        out << r.t_in << ',' << r.method << ',' << r.metric << ',' << r.count << ',' << r.na_count << ','
            << detail::optional_cell(r.mean) << ',' << detail::optional_cell(r.median) << '\n';
    }
}

inline void write_win_fraction_csv(std::ostream& out, const std::vector<WinFractionRow>& rows) {
    out << "t_in,metric,method,opponent,wins,comparisons,fraction\n";
    for (const auto& r : rows) {
        out << r.t_in << ',' << r.metric << ',' << r.method << ',' << r.opponent << ',' << r.wins << ','
            << r.comparisons << ',' << detail::optional_cell(r.fraction) << '\n';
    }
}

}  // namespace bahc
