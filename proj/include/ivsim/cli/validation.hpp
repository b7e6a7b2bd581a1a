#pragma once

// Oracle-based validation suite. Each criterion produces one or more rows
// (check name, statistic, threshold, pass) and an overall verdict.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "ivsim/analysis/bounds.hpp"
#include "ivsim/analysis/estimators.hpp"
#include "ivsim/cli/experiments.hpp"

namespace ivsim::cli {

struct CheckRow {
    std::string name;
    double statistic = 0.0;
    double threshold = 0.0;
    bool pass = false;
};

struct CriterionResult {
    int id = 0;
    std::string title;
    std::vector<CheckRow> rows;
    double seconds = 0.0;

    [[nodiscard]] bool pass() const {
        return !rows.empty() && std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.pass; });
    }
};

/// Sample sizes per criterion. `full` is the acceptance scale; `quick`
/// shrinks every count for smoke runs and is not authoritative.
struct ValidationSizes {
    std::size_t nn_samples = 100'000;
    std::size_t laplace_phis = 100;
    std::size_t laplace_draws = 10'000;
    std::size_t tail_phis = 20;
    std::size_t tail_replays = 10'000;
    std::size_t exit_samples = 10'000;
    std::uint64_t exit_horizon = 10'000;
    std::size_t aloha_samples = 10'000;
    double strip = 400.0;
    std::uint64_t velocity_horizon = 100'000;
    std::size_t stationary_min_hops = 200;
    std::size_t stationary_reps = 2;
    std::size_t chernoff_chains = 10'000;
    std::size_t determinism_reps = 200;

    static ValidationSizes for_scale(ValidationScale s) {
        ValidationSizes v;
        if (s == ValidationScale::quick) {
            v.nn_samples = 20'000;
            v.laplace_phis = 10;
            v.laplace_draws = 2'000;
            v.tail_phis = 4;
            v.tail_replays = 2'000;
            v.exit_samples = 1'000;
            v.aloha_samples = 1'000;
            v.strip = 160.0;
            v.velocity_horizon = 30'000;
            v.stationary_min_hops = 50;
            v.stationary_reps = 1;
            v.chernoff_chains = 2'000;
            v.determinism_reps = 40;
        }
        return v;
    }
};

class Validator {
public:
    Validator(SimParams base, ValidationSizes sizes, unsigned jobs, std::filesystem::path scratch)
        : base_(std::move(base)), sizes_(sizes), jobs_(jobs), scratch_(std::move(scratch)) {}

    /// Runs the criteria in order, reporting each as soon as it completes.
    std::vector<CriterionResult> run_all(const std::function<void(const CriterionResult&)>& report = {}) {
        std::vector<CriterionResult> out;
        using Fn = CriterionResult (Validator::*)();
        for (Fn f : {&Validator::cone_neighbor_law, &Validator::campbell_integral, &Validator::laplace_bound,
                     &Validator::geometric_tail, &Validator::finite_mean_power_control, &Validator::aloha_contrast,
                     &Validator::velocity_positive, &Validator::stationarization, &Validator::chernoff,
                     &Validator::intensity_independence, &Validator::determinism}) {
            const auto t0 = std::chrono::steady_clock::now();
            auto r = (this->*f)();
            r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            if (report) report(r);
            out.push_back(std::move(r));
        }
        return out;
    }

    // 1. Cone nearest-neighbor distances follow 1 - exp(-lambda*pi*r^2/m).
    CriterionResult cone_neighbor_law() {
        CriterionResult res{1, "cone nearest-neighbor law (KS)", {}, 0};
        const ConePartition cp(base_.cones);
        const auto m = static_cast<std::size_t>(cp.count());
        std::vector<double> r;
        r.reserve(sizes_.nn_samples + m);
        const StreamKey key = criterion_key(1);
        const double half = 10.0 / std::sqrt(base_.lambda);
        std::vector<double> d(m);
        for (std::uint64_t rep = 0; r.size() < sizes_.nn_samples; ++rep) {
            Stream rng(key.child(rep));
            const auto ps = palm_condition(sample_ppp(base_.lambda, Window::centered(2 * half, 2 * half), rng), {0, 0});
            ConeNeighborIndex(ps, cp).cone_distances({0.0, 0.0}, d);
            // Disjoint cones of a PPP are independent, so all m distances are usable.
            for (double x : d)
                if (r.size() < sizes_.nn_samples) r.push_back(x);
        }
        const double ks =
            analysis::ks_statistic(r, [&](double x) { return analysis::nn_cone_cdf(x, base_.lambda, base_.cones); });
        res.rows.push_back({"ks_cone_nn_distance", ks, 0.02, ks < 0.02});
        return res;
    }

    // 2. Closed-form Campbell integral against adaptive 2-D quadrature.
    CriterionResult campbell_integral() {
        CriterionResult res{2, "Campbell integral of the path loss", {}, 0};
        using boost::math::quadrature::exp_sinh;
        using boost::math::quadrature::gauss_kronrod;
        for (double alpha : {2.5, 3.0, 4.0, 6.0}) {
            exp_sinh<double> tail;
            auto radial = [&](double) {
                const double inner = gauss_kronrod<double, 31>::integrate([](double r) { return r; }, 0.0, 1.0, 15, 1e-14);
                const double outer = tail.integrate([&](double r) { return std::pow(r, 1.0 - alpha); }, 1.0,
                                                    std::numeric_limits<double>::infinity());
                return inner + outer;
            };
            const double quad = gauss_kronrod<double, 31>::integrate(radial, 0.0, 2.0 * std::numbers::pi, 15, 1e-14);
            const double rel = std::abs(analysis::campbell_l_integral(alpha) - quad) / quad;
            res.rows.push_back({"campbell_rel_err_alpha_" + format_number(alpha), rel, 1e-6, rel < 1e-6});
        }
        const double at4 = std::abs(analysis::campbell_l_integral(4.0) - 2.0 * std::numbers::pi);
        res.rows.push_back({"campbell_alpha_4_equals_2pi_abs_err", at4, 1e-12, at4 < 1e-12});
        return res;
    }

    // 3. Monte Carlo E[exp(-a I*) | Phi] with worst-case cones stays above the product bound.
    CriterionResult laplace_bound() {
        CriterionResult res{3, "Laplace lower bound on worst-case interference", {}, 0};
        SimParams p = base_;
        p.window_x = p.window_y = 40.0;
        p.guard = std::min(p.guard, 19.0);
        p.cone_choice = ConeChoiceModel::worst_case;
        const auto b = analysis::BoundInputs::from(p);
        struct Out {
            double margin;
            bool violated;
        };
        const StreamKey key = criterion_key(3);
        const auto outs = parallel_map(sizes_.laplace_phis, jobs_, [&](std::size_t i) {
            World w = sample_palm_world(p, key.child(i).child(Purpose::phi));
            const ExitTimeProblem prob(w, *w.points().tagged_index());
            const InterfererSet& set = prob.interferers();
            const StreamKey draws = key.child(i).child(Purpose::replay);
            double s = 0.0, s2 = 0.0;
            for (std::uint64_t d = 1; d <= sizes_.laplace_draws; ++d) {
                const double v = std::exp(-b.a * set.sample(draws, d, p.mu));
                s += v;
                s2 += v * v;
            }
            const double n = static_cast<double>(sizes_.laplace_draws);
            const double mean = s / n;
            const double se = std::sqrt(std::max(0.0, s2 / n - mean * mean) / (n - 1.0));
            const double bound = analysis::laplace_lower_bound(w.points(), w.points()[prob.receiver()], b.c1, p.alpha);
            return Out{mean - bound, mean < bound - 3.0 * se};
        });
        double violations = 0.0, min_margin = std::numeric_limits<double>::infinity();
        for (const auto& o : outs) {
            violations += o.violated ? 1.0 : 0.0;
            min_margin = std::min(min_margin, o.margin);
        }
        res.rows.push_back({"laplace_bound_violations", violations, 0.0, violations == 0.0});
        res.rows.push_back({"laplace_min_margin_mc_minus_bound", min_margin, 0.0, true});
        return res;
    }

    // 4. Conditional exit-time survival under (1 - J)^k.
    CriterionResult geometric_tail() {
        CriterionResult res{4, "geometric conditional tail bound", {}, 0};
        const SimParams p = base_;
        constexpr int kmax = 50;
        const StreamKey key = criterion_key(4);
        const auto viol = parallel_map(sizes_.tail_phis, jobs_, [&](std::size_t i) {
            World w = sample_palm_world(p, key.child(i).child(Purpose::phi));
            ExitTimeProblem prob(w, *w.points().tagged_index());
            const double j = analysis::j_bound(w.points(), w.points()[prob.receiver()], p);
            std::vector<std::size_t> above(kmax + 1, 0);
            for (std::uint64_t rep = 0; rep < sizes_.tail_replays; ++rep) {
                const auto t = prob.replay(key.child(i).child(Purpose::replay).child(rep), kmax + 1);
                for (std::uint64_t k = 1; k <= kmax; ++k)
                    if (t.slots > k) ++above[k];
            }
            std::size_t v = 0;
            const double n = static_cast<double>(sizes_.tail_replays);
            for (int k = 1; k <= kmax; ++k) {
                const double s = static_cast<double>(above[static_cast<std::size_t>(k)]) / n;
                const double se = std::sqrt(s * (1.0 - s) / n);
                if (s > std::pow(1.0 - j, k) + 3.0 * se) ++v;
            }
            return v;
        });
        double total = 0.0;
        for (auto v : viol) total += static_cast<double>(v);
        res.rows.push_back({"tail_bound_violations", total, 0.0, total == 0.0});
        return res;
    }

    // 5. Running mean of T stabilizes under power control.
    CriterionResult finite_mean_power_control() {
        CriterionResult res{5, "finite mean exit time under power control", {}, 0};
        append_stabilization(res, exit_times_at(base_.lambda), "");
        return res;
    }

    // 6. ALOHA at equal average power: no stabilization, heavy tail.
    CriterionResult aloha_contrast() {
        CriterionResult res{6, "ALOHA baseline heavy tail", {}, 0};
        SimParams p = base_;
        p.policy = PolicyKind::aloha;
        p.aloha_prob = 0.5;
        p.aloha_power = 0.0;
        p.horizon = sizes_.exit_horizon;
        p.replications = sizes_.aloha_samples;
        p.seed = criterion_key(6).value();
        const auto samples = exit_time_samples(p, jobs_);
        const auto values = exit_time_values(samples);
        const double change = analysis::running_mean_final_half_change(values);
        const double hill = analysis::hill_tail_index(values);
        res.rows.push_back({"aloha_running_mean_final_half_change", change, 0.05, change >= 0.05});
        res.rows.push_back({"aloha_hill_tail_index_top10", hill, 1.2, hill <= 1.2});
        res.rows.push_back({"aloha_censored_fraction", static_cast<double>(censored_count(samples)) / samples.size(),
                            0.0, true});
        return res;
    }

    // 7. Positive information velocity on the strip.
    CriterionResult velocity_positive() {
        CriterionResult res{7, "positive information velocity", {}, 0};
        const SimParams p = strip_params(false);
        const auto trace = run_tagged_packet(p, criterion_key(7));
        const auto s = trace_stats(trace, p, criterion_key(7).child(Purpose::bootstrap));
        res.rows.push_back({"velocity", s.velocity, 0.0, s.velocity > 0.0});
        res.rows.push_back({"velocity_bootstrap_ci_lo", s.bootstrap.lo, 0.0, s.bootstrap.lo > 0.0});
        res.rows.push_back(
            {"d_over_t_final_20pct_fluctuation", s.final_fifth_fluctuation, 0.10, s.final_fifth_fluctuation < 0.10});
        res.rows.push_back({"velocity_trace_slots", static_cast<double>(trace.total_slots()), 0.0, true});
        return res;
    }

    // 8. Virtual interferers: coupling, stationarity and slower velocity.
    CriterionResult stationarization() {
        CriterionResult res{8, "stationarized delays", {}, 0};
        const SimParams stat = strip_params(true);
        const SimParams plain = strip_params(false);
        const StreamKey key = criterion_key(8);
        struct Pair {
            PacketTrace stationary;
            PacketTrace plain;
        };
        const auto pairs = parallel_map(sizes_.stationary_reps, jobs_, [&](std::size_t r) {
            return Pair{run_tagged_packet(stat, key.child(r)), run_tagged_packet(plain, key.child(r))};
        });
        double hops = 0.0, violations = 0.0;
        std::vector<double> first, second, dv;
        double v_stat = 0.0, v_plain = 0.0;
        for (const auto& pr : pairs) {
            const auto& h = pr.stationary.hops;
            for (std::size_t i = 0; i < h.size(); ++i) {
                hops += 1.0;
                if (!h[i].enhanced_delay || *h[i].enhanced_delay < h[i].delay) violations += 1.0;
                const double tp = static_cast<double>(h[i].enhanced_delay.value_or(h[i].delay));
                (i < h.size() / 2 ? first : second).push_back(tp);
            }
            const double vs = information_velocity(pr.stationary).velocity;
            const double vp = information_velocity(pr.plain).velocity;
            v_stat += vs;
            v_plain += vp;
            dv.push_back(vp - vs);
        }
        v_stat /= static_cast<double>(pairs.size());
        v_plain /= static_cast<double>(pairs.size());
        res.rows.push_back({"coupled_hops", hops, static_cast<double>(sizes_.stationary_min_hops),
                            hops >= static_cast<double>(sizes_.stationary_min_hops)});
        res.rows.push_back({"t_prime_below_t_violations", violations, 0.0, violations == 0.0});
        if (first.size() >= 2 && second.size() >= 2) {
            const auto a = analysis::mean_ci(first), b = analysis::mean_ci(second);
            const double gap = std::max(a.lo - b.hi, b.lo - a.hi);  // > 0 means disjoint
            res.rows.push_back({"t_prime_half_ci_gap", gap, 0.0, a.overlaps(b)});
        } else {
            res.rows.push_back({"t_prime_half_ci_gap", std::numeric_limits<double>::quiet_NaN(), 0.0, false});
        }
        const double mean_dv = analysis::mean(dv);
        res.rows.push_back({"paired_plain_minus_stationary_velocity", mean_dv, 0.0, v_stat <= v_plain});
        return res;
    }

    // 9. Chernoff bound on hop-progress sums and existence of a large rate.
    CriterionResult chernoff() {
        CriterionResult res{9, "Chernoff rate for hop progress", {}, 0};
        const ConePartition cp(base_.cones);
        const double xi = analysis::mean_hop_progress(base_.lambda, base_.cones);
        const double delta = xi / 2.0;
        const double zeta = analysis::chernoff_zeta(delta, base_.lambda, base_.cones).zeta;
        const StreamKey key = criterion_key(9);
        for (int n : {10, 20, 50}) {
            std::size_t hits = 0;
            for (std::uint64_t c = 0; c < sizes_.chernoff_chains; ++c) {
                Stream rng(key.child(static_cast<std::uint64_t>(n)).child(c));
                double s = 0.0;
                for (int i = 0; i < n; ++i) s += sample_hop(base_.lambda, cp, rng).progress();
                hits += s < n * delta ? 1 : 0;
            }
            const double emp = static_cast<double>(hits) / static_cast<double>(sizes_.chernoff_chains);
            const double bound = std::exp(-zeta * n);
            res.rows.push_back({"lower_tail_n" + std::to_string(n), emp, bound, emp <= bound});
        }
        const double c1 = analysis::BoundInputs::from(base_).c1;
        const double g0 = analysis::g_function(0.0, c1, base_.alpha);
        const auto d = analysis::delta_with_rate_above(g0, base_.lambda, base_.cones);
        const double z = d ? analysis::chernoff_zeta(*d, base_.lambda, base_.cones).zeta : 0.0;
        res.rows.push_back({"max_rate_delta_above_g0", z, g0, d.has_value() && z > g0});
        return res;
    }

    // 10. Criterion 5 at several intensities.
    CriterionResult intensity_independence() {
        CriterionResult res{10, "finite mean at lambda in {0.5, 1, 2}", {}, 0};
        for (double lambda : {0.5, 1.0, 2.0}) append_stabilization(res, exit_times_at(lambda), "_lambda_" + format_number(lambda));
        return res;
    }

    // 11. Byte-identical CSVs for the same config and seed regardless of jobs.
    CriterionResult determinism() {
        CriterionResult res{11, "deterministic outputs across --jobs", {}, 0};
        ExperimentConfig cfg;
        cfg.params = base_;
        cfg.params.seed = criterion_key(11).value();
        cfg.params.replications = sizes_.determinism_reps;
        cfg.seed_given = true;
        const auto d1 = scratch_ / "determinism_a", d2 = scratch_ / "determinism_b";
        std::filesystem::remove_all(d1);
        std::filesystem::remove_all(d2);
        cfg.kind = ExperimentKind::exit_time;
        cfg.jobs = 1;
        run_single(cfg, d1 / "exit_time");
        cfg.jobs = 3;
        run_single(cfg, d2 / "exit_time");
        cfg.kind = ExperimentKind::velocity;
        cfg.params.window_x = 120.0;
        cfg.params.window_y = 60.0;
        cfg.params.horizon = 20'000;
        cfg.params.replications = 3;
        cfg.params.stationary_mode = true;
        cfg.params.interference_radius = cfg.params.guard;
        cfg.jobs = 1;
        run_single(cfg, d1 / "velocity");
        cfg.jobs = 2;
        run_single(cfg, d2 / "velocity");
        double files = 0.0, mismatches = 0.0;
        for (const auto& e : std::filesystem::recursive_directory_iterator(d1)) {
            if (!e.is_regular_file() || e.path().extension() != ".csv") continue;
            files += 1.0;
            const auto other = d2 / std::filesystem::relative(e.path(), d1);
            if (!std::filesystem::exists(other) || slurp(e.path()) != slurp(other)) mismatches += 1.0;
        }
        res.rows.push_back({"csv_files_compared", files, 1.0, files >= 2.0});
        res.rows.push_back({"csv_mismatches", mismatches, 0.0, mismatches == 0.0});
        return res;
    }

private:
    StreamKey criterion_key(int id) const {
        return StreamKey(base_.seed).child(Purpose::diagnostics).child(static_cast<std::uint64_t>(id));
    }

    SimParams strip_params(bool stationary) const {
        SimParams p = base_;
        p.window_x = p.window_y = sizes_.strip;
        p.horizon = sizes_.velocity_horizon;
        p.interference_radius = p.guard;
        p.stationary_mode = stationary;
        return p;
    }

    /// Exit-time samples at intensity lambda; cached so criteria 5 and 10 share the lambda = 1 run.
    const std::vector<ExitTimeSample>& exit_times_at(double lambda) {
        for (const auto& [l, s] : exit_cache_)
            if (l == lambda) return s;
        SimParams p = base_;
        p.lambda = lambda;
        p.policy = PolicyKind::power_control;
        p.horizon = sizes_.exit_horizon;
        p.replications = sizes_.exit_samples;
        p.seed = criterion_key(5).value();
        exit_cache_.emplace_back(lambda, exit_time_samples(p, jobs_));
        return exit_cache_.back().second;
    }

    static void append_stabilization(CriterionResult& res, const std::vector<ExitTimeSample>& samples,
                                     const std::string& suffix) {
        const auto values = exit_time_values(samples);
        const double change = analysis::running_mean_final_half_change(values);
        const double cens = static_cast<double>(censored_count(samples)) / static_cast<double>(samples.size());
        res.rows.push_back({"running_mean_final_half_change" + suffix, change, 0.05, change < 0.05});
        res.rows.push_back({"censored_fraction" + suffix, cens, 1e-3, cens < 1e-3});
    }

    static std::string slurp(const std::filesystem::path& p) {
        std::ifstream in(p, std::ios::binary);
        return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    }

    SimParams base_;
    ValidationSizes sizes_;
    unsigned jobs_;
    std::filesystem::path scratch_;
    std::vector<std::pair<double, std::vector<ExitTimeSample>>> exit_cache_;
};

inline void write_validation_csv(const std::vector<CriterionResult>& results, const std::filesystem::path& path) {
    CsvWriter csv(path, {"check_name", "statistic", "threshold", "pass"});
    for (const auto& r : results)
        for (const auto& row : r.rows) csv.row(row.name, row.statistic, row.threshold, row.pass);
}

inline Json validation_json(const std::vector<CriterionResult>& results) {
    Json arr = Json::array();
    for (const auto& r : results) {
        Json rows = Json::array();
        for (const auto& row : r.rows)
            rows.push_back({{"check", row.name}, {"statistic", row.statistic}, {"threshold", row.threshold},
                            {"pass", row.pass}});
        arr.push_back({{"criterion", r.id}, {"title", r.title}, {"pass", r.pass()}, {"checks", rows}});
    }
    return arr;
}

}  // namespace ivsim::cli
