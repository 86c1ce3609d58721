#pragma once

#include <array>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <future>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pmwc/pmwc.hpp"

namespace pmwc::cli {

namespace detail_cli {

using ordered_json = nlohmann::ordered_json;

/// Shortest round-trip decimal form, locale independent.
inline std::string num_str(double v) {
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

inline std::string fixed_str(double v, int decimals) {
    std::array<char, 64> buf{};
    const auto res =
        std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::fixed, decimals);
    return std::string(buf.data(), res.ptr);
}

struct PlantArgs {
    std::vector<double> num;
    std::vector<double> den;
    std::string file;
};

inline TransferFunction make_plant(const PlantArgs& a) {
    std::vector<double> num = a.num;
    std::vector<double> den = a.den;
    if (!a.file.empty()) {
        if (!num.empty() || !den.empty())
            throw std::invalid_argument("give either --plant-file or --num/--den, not both");
        std::ifstream in(a.file);
        if (!in) throw std::invalid_argument("cannot open plant file: " + a.file);
        nlohmann::json doc = nlohmann::json::parse(in);
        num = doc.at("num").get<std::vector<double>>();
        den = doc.at("den").get<std::vector<double>>();
    }
    if (num.empty() || den.empty())
        throw std::invalid_argument("plant coefficients are required (--num/--den or --plant-file)");
    return {Polynomial(num), Polynomial(den)};
}

/// Routes the payload to --out when given, otherwise to the output stream.
class PayloadSink {
public:
    PayloadSink(const std::string& path, std::ostream& fallback) : target_(&fallback) {
        if (!path.empty()) {
            file_.open(path);
            if (!file_) throw std::runtime_error("cannot open output file: " + path);
            target_ = &file_;
        }
    }
    std::ostream& stream() { return *target_; }

private:
    std::ofstream file_;
    std::ostream* target_;
};

struct TableRef {
    double kp, ki, kd, pm, wc, iae;
};

// Benchmark reference data: the published comparison table for
// G(s) = 1/(s+1)^n at PM = 60 deg, wc = 1 rad/s.
inline constexpr std::array<TableRef, 3> kPmwcExpected{{
    {0.366, 1.366, 0.000, 60.00, 1.0000, 1.1500},
    {1.732, 1.251, 0.251, 60.00, 1.0000, 1.1466},
    {2.732, 1.171, 1.903, 60.00, 1.0000, 1.1469},
}};
inline constexpr std::array<TableRef, 3> kPidtuneReference{{
    {0.582, 1.289, 0.000, 69.31, 1.0000, 1.0090},
    {1.873, 1.336, 0.634, 69.44, 1.0000, 1.0131},
    {2.732, 0.977, 1.709, 60.00, 1.0000, 1.1999},
}};

inline TransferFunction benchmark_plant(int n) {
    Polynomial den{1.0};
    const Polynomial lag{1.0, 1.0};
    for (int i = 0; i < n; ++i) den = den * lag;
    return {Polynomial{1.0}, den};
}

struct BenchRow {
    std::string plant;
    std::string method;
    double kp, ki, kd, pm_deg, wc_rad_s, iae;
    bool stable;
};

inline ordered_json tune_json(const TuneResult& r) {
    ordered_json j;
    j["Kp"] = r.gains.kp;
    j["Ki"] = r.gains.ki;
    j["Kd"] = r.gains.kd;
    j["PM"] = r.pm_achieved;
    j["wc"] = r.wc_achieved;
    j["IAE"] = r.iae;
    j["Stable"] = r.stable;
    j["converged"] = r.solver.converged;
    j["iterations"] = r.solver.iterations;
    return j;
}

inline void print_tune_text(const TuneResult& r, std::ostream& os) {
    os << "Kp         " << fixed_str(r.gains.kp, 3) << "\n"
       << "Ki         " << fixed_str(r.gains.ki, 3) << "\n"
       << "Kd         " << fixed_str(r.gains.kd, 3) << "\n"
       << "PM         " << fixed_str(r.pm_achieved, 2) << "\n"
       << "wc         " << fixed_str(r.wc_achieved, 4) << "\n"
       << "IAE        " << fixed_str(r.iae, 4) << "\n"
       << "Stable     " << (r.stable ? 1 : 0) << "\n"
       << "converged  " << (r.solver.converged ? 1 : 0) << "\n"
       << "iterations " << r.solver.iterations << "\n";
}

}  // namespace detail_cli

/**
 * Command-line driver. Subcommands: tune, verify, bench, step, bode.
 * Payload goes to the output stream (or --out); diagnostics go to the
 * error stream. Exit codes: 0 success, 1 usage or infeasibility,
 * 2 verification concern, 3 benchmark mismatch.
 */
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    using detail_cli::ordered_json;

    CLI::App app{"PMwc-Tune: PID synthesis by IAE minimization under exact phase-margin "
                 "and crossover-frequency constraints"};
    app.require_subcommand(1);

    detail_cli::PlantArgs plant_args;
    double pm = 60.0, wc = 1.0, horizon = 20.0, dt = 0.01;
    double kp = 0.0, ki = 0.0, kd = 0.0;
    std::string format, out_path, constraint_form = "complex";
    int max_iter = 500;
    double ftol = 1e-6, backtrack = 0.5, min_step = 1e-12;
    bool tune_first = false;
    double w_min = 1e-3, w_max = 1e3;
    int ppd = 200;

    const auto add_plant = [&](CLI::App* cmd) {
        cmd->add_option("--num", plant_args.num, "numerator coefficients, descending powers of s")
            ->expected(-1);
        cmd->add_option("--den", plant_args.den, "denominator coefficients, descending powers of s")
            ->expected(-1);
        cmd->add_option("--plant-file", plant_args.file,
                        "JSON file {\"num\": [...], \"den\": [...]} instead of --num/--den");
    };
    const auto add_targets = [&](CLI::App* cmd) {
        cmd->add_option("--pm", pm, "target phase margin, degrees")->capture_default_str();
        cmd->add_option("--wc", wc, "target gain-crossover frequency, rad/s")->capture_default_str();
    };
    const auto add_grid = [&](CLI::App* cmd) {
        cmd->add_option("--horizon", horizon, "simulation horizon, seconds")->capture_default_str();
        cmd->add_option("--dt", dt, "simulation step, seconds")->capture_default_str();
    };
    const auto add_out = [&](CLI::App* cmd) {
        cmd->add_option("--out", out_path, "write the payload to a file instead of stdout");
    };
    const auto add_gains = [&](CLI::App* cmd) {
        cmd->add_option("--kp", kp, "proportional gain");
        cmd->add_option("--ki", ki, "integral gain");
        cmd->add_option("--kd", kd, "derivative gain");
    };
    const auto add_solver = [&](CLI::App* cmd) {
        cmd->add_option("--max-iter", max_iter, "SQP iteration cap")->capture_default_str();
        cmd->add_option("--ftol", ftol, "function tolerance")->capture_default_str();
        cmd->add_option("--backtrack", backtrack, "line-search backtracking factor")
            ->capture_default_str();
        cmd->add_option("--min-step", min_step, "smallest line-search step")->capture_default_str();
        cmd->add_option("--constraint-form", constraint_form,
                        "crossover constraint formulation fed to the solver")
            ->check(CLI::IsMember({"complex", "magphase"}))
            ->capture_default_str();
    };

    CLI::App* cmd_tune = app.add_subcommand("tune", "tune PID gains for a plant");
    add_plant(cmd_tune);
    add_targets(cmd_tune);
    add_grid(cmd_tune);
    add_solver(cmd_tune);
    add_out(cmd_tune);
    cmd_tune->add_option("--format", format, "json or text")
        ->check(CLI::IsMember({"json", "text"}));

    CLI::App* cmd_verify =
        app.add_subcommand("verify", "measure margins, IAE and stability of given gains");
    add_plant(cmd_verify);
    add_gains(cmd_verify);
    add_grid(cmd_verify);
    add_out(cmd_verify);
    cmd_verify->add_option("--format", format, "json or text")
        ->check(CLI::IsMember({"json", "text"}));

    CLI::App* cmd_bench = app.add_subcommand(
        "bench", "reproduce the benchmark table for G = 1/(s+1)^n, n = 1..3, at PM=60, wc=1");
    add_out(cmd_bench);
    cmd_bench->add_option("--format", format, "text, csv or json")
        ->check(CLI::IsMember({"text", "csv", "json"}));

    CLI::App* cmd_step = app.add_subcommand(
        "step",
        "closed-loop unit-step response as CSV (t,y,e); prints settling time (2% band), "
        "overshoot and IAE on stderr");
    add_plant(cmd_step);
    add_gains(cmd_step);
    add_targets(cmd_step);
    add_grid(cmd_step);
    add_out(cmd_step);
    cmd_step->add_flag("--tune", tune_first, "tune first and use the resulting gains");

    CLI::App* cmd_bode = app.add_subcommand(
        "bode", "open-loop frequency response as CSV (w_rad_s,mag_db,phase_deg)");
    add_plant(cmd_bode);
    add_gains(cmd_bode);
    add_targets(cmd_bode);
    add_grid(cmd_bode);
    add_out(cmd_bode);
    cmd_bode->add_flag("--tune", tune_first, "tune first and use the resulting gains");
    cmd_bode->add_option("--w-min", w_min, "scan start, rad/s")->capture_default_str();
    cmd_bode->add_option("--w-max", w_max, "scan end, rad/s")->capture_default_str();
    cmd_bode->add_option("--points-per-decade", ppd, "sampling density")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }

    try {
        const SimGrid grid(horizon, dt);
        SolveOptions solver;
        solver.max_iterations = max_iter;
        solver.function_tolerance = ftol;
        solver.backtrack_factor = backtrack;
        solver.min_step = min_step;
        TuneSpec spec;
        spec.pm_target_deg = pm;
        spec.wc_target = wc;
        spec.grid = grid;
        spec.solver = solver;
        spec.constraint_form = (constraint_form == "magphase") ? ConstraintForm::magnitude_phase
                                                               : ConstraintForm::complex_equality;

        if (cmd_tune->parsed()) {
            const TransferFunction plant = detail_cli::make_plant(plant_args);
            const TuneResult result = tune(plant, spec);
            detail_cli::PayloadSink sink(out_path, out);
            if (format == "text")
                detail_cli::print_tune_text(result, sink.stream());
            else
                sink.stream() << detail_cli::tune_json(result).dump(2) << "\n";
            if (!result.warning.empty()) err << "warning: " << result.warning << "\n";
            if (!result.solver.converged) {
                err << "warning: solver did not converge\n";
                return 2;
            }
            return 0;
        }

        if (cmd_verify->parsed()) {
            const TransferFunction plant = detail_cli::make_plant(plant_args);
            const PidGains gains{kp, ki, kd};
            const TransferFunction loop = series(pid_tf(gains), plant);
            const std::vector<double> crossings = gain_crossovers(loop);
            const double iae_value = iae_of_gains(gains, plant, grid);
            bool stable = false;
            try {
                stable = is_stable(feedback_unity(loop));
            } catch (const std::exception&) {
                stable = false;
            }

            ordered_json j;
            bool concern = !stable;
            if (crossings.empty()) {
                j["PM"] = nullptr;
                j["wc"] = nullptr;
                err << "warning: no gain crossover in scan range\n";
                concern = true;
            } else {
                j["PM"] = phase_margin_at(loop, crossings.front());
                j["wc"] = crossings.front();
            }
            j["crossing_count"] = static_cast<int>(crossings.size());
            j["IAE"] = iae_value;
            j["Stable"] = stable;

            detail_cli::PayloadSink sink(out_path, out);
            if (format == "text") {
                std::ostream& os = sink.stream();
                os << "PM             "
                   << (crossings.empty() ? "n/a" : detail_cli::fixed_str(j["PM"].get<double>(), 2))
                   << "\n"
                   << "wc             "
                   << (crossings.empty() ? "n/a" : detail_cli::fixed_str(j["wc"].get<double>(), 4))
                   << "\n"
                   << "crossing_count " << crossings.size() << "\n"
                   << "IAE            " << detail_cli::fixed_str(iae_value, 4) << "\n"
                   << "Stable         " << (stable ? 1 : 0) << "\n";
            } else {
                sink.stream() << j.dump(2) << "\n";
            }
            if (!stable) err << "warning: closed loop is not stable\n";
            return concern ? 2 : 0;
        }

        if (cmd_bench->parsed()) {
            std::array<std::future<TuneResult>, 3> jobs;
            for (int n = 1; n <= 3; ++n)
                jobs[static_cast<std::size_t>(n - 1)] = std::async(std::launch::async, [n]() {
                    return tune(detail_cli::benchmark_plant(n), TuneSpec{});
                });

            std::vector<detail_cli::BenchRow> rows;
            std::vector<std::string> mismatches;
            const auto check = [&mismatches](const std::string& plant, const std::string& cell,
                                             double got, double want, double tol) {
                if (std::abs(got - want) > tol) {
                    std::ostringstream msg;
                    msg << plant << " " << cell << ": got " << got << ", want " << want << " +/- "
                        << tol;
                    mismatches.push_back(msg.str());
                }
            };
            for (int n = 1; n <= 3; ++n) {
                const std::string label = (n == 1) ? "1/(s+1)" : "1/(s+1)^" + std::to_string(n);
                const TuneResult r = jobs[static_cast<std::size_t>(n - 1)].get();
                const detail_cli::TableRef& want = detail_cli::kPmwcExpected[static_cast<std::size_t>(n - 1)];
                rows.push_back({label, "pmwc-tune", r.gains.kp, r.gains.ki, r.gains.kd,
                                r.pm_achieved, r.wc_achieved, r.iae, r.stable});
                const detail_cli::TableRef& ref =
                    detail_cli::kPidtuneReference[static_cast<std::size_t>(n - 1)];
                rows.push_back({label, "pidtune-reference", ref.kp, ref.ki, ref.kd, ref.pm, ref.wc,
                                ref.iae, true});

                check(label, "kp", r.gains.kp, want.kp, 0.01);
                check(label, "ki", r.gains.ki, want.ki, 0.01);
                check(label, "kd", r.gains.kd, want.kd, 0.01);
                check(label, "pm_deg", r.pm_achieved, want.pm, 0.05);
                check(label, "wc_rad_s", r.wc_achieved, want.wc, 0.001);
                check(label, "iae", r.iae, want.iae, 0.01);
                if (!r.stable) mismatches.push_back(label + " stable: got 0, want 1");
                if (!r.solver.converged) mismatches.push_back(label + " converged: got 0, want 1");
            }

            detail_cli::PayloadSink sink(out_path, out);
            std::ostream& os = sink.stream();
            if (format == "csv") {
                os << "plant,method,kp,ki,kd,pm_deg,wc_rad_s,iae,stable\n";
                for (const auto& r : rows)
                    os << r.plant << "," << r.method << "," << detail_cli::fixed_str(r.kp, 3) << ","
                       << detail_cli::fixed_str(r.ki, 3) << "," << detail_cli::fixed_str(r.kd, 3)
                       << "," << detail_cli::fixed_str(r.pm_deg, 2) << ","
                       << detail_cli::fixed_str(r.wc_rad_s, 4) << ","
                       << detail_cli::fixed_str(r.iae, 4) << "," << (r.stable ? 1 : 0) << "\n";
            } else if (format == "json") {
                ordered_json arr = ordered_json::array();
                for (const auto& r : rows) {
                    ordered_json j;
                    j["plant"] = r.plant;
                    j["method"] = r.method;
                    j["kp"] = r.kp;
                    j["ki"] = r.ki;
                    j["kd"] = r.kd;
                    j["pm_deg"] = r.pm_deg;
                    j["wc_rad_s"] = r.wc_rad_s;
                    j["iae"] = r.iae;
                    j["stable"] = r.stable;
                    arr.push_back(j);
                }
                os << arr.dump(2) << "\n";
            } else {
                os << std::left << std::setw(11) << "plant" << std::setw(19) << "method"
                   << std::setw(8) << "kp" << std::setw(8) << "ki" << std::setw(8) << "kd"
                   << std::setw(8) << "pm_deg" << std::setw(10) << "wc_rad_s" << std::setw(8)
                   << "iae" << "stable\n";
                for (const auto& r : rows)
                    os << std::left << std::setw(11) << r.plant << std::setw(19) << r.method
                       << std::setw(8) << detail_cli::fixed_str(r.kp, 3) << std::setw(8)
                       << detail_cli::fixed_str(r.ki, 3) << std::setw(8)
                       << detail_cli::fixed_str(r.kd, 3) << std::setw(8)
                       << detail_cli::fixed_str(r.pm_deg, 2) << std::setw(10)
                       << detail_cli::fixed_str(r.wc_rad_s, 4) << std::setw(8)
                       << detail_cli::fixed_str(r.iae, 4) << (r.stable ? 1 : 0) << "\n";
            }
            if (!mismatches.empty()) {
                err << "benchmark mismatch against the reference table:\n";
                for (const std::string& m : mismatches) err << "  " << m << "\n";
                return 3;
            }
            return 0;
        }

        if (cmd_step->parsed()) {
            const TransferFunction plant = detail_cli::make_plant(plant_args);
            PidGains gains{kp, ki, kd};
            if (tune_first) {
                const TuneResult r = tune(plant, spec);
                gains = r.gains;
                err << "tuned gains: kp=" << detail_cli::num_str(gains.kp)
                    << " ki=" << detail_cli::num_str(gains.ki)
                    << " kd=" << detail_cli::num_str(gains.kd) << "\n";
            }
            const TransferFunction loop = series(pid_tf(gains), plant);
            const TransferFunction closed = feedback_unity(loop);
            const StepResponse resp = step_response(to_state_space(closed), grid);

            detail_cli::PayloadSink sink(out_path, out);
            std::ostream& os = sink.stream();
            os << "t,y,e\n";
            for (std::size_t k = 0; k < resp.t.size(); ++k)
                os << detail_cli::num_str(resp.t[k]) << "," << detail_cli::num_str(resp.y[k]) << ","
                   << detail_cli::num_str(1.0 - resp.y[k]) << "\n";

            double y_final = resp.y.back();
            try {
                y_final = dcgain(closed);
            } catch (const std::exception&) {
            }
            const StepMetrics metrics = step_metrics(resp, y_final);
            err << "settling_time_s=" << detail_cli::fixed_str(metrics.settling_time, 2)
                << " overshoot_pct=" << detail_cli::fixed_str(metrics.overshoot_pct, 2)
                << " iae=" << detail_cli::fixed_str(iae(resp), 4) << "\n";

            bool stable = false;
            try {
                stable = is_stable(closed);
            } catch (const std::exception&) {
            }
            if (!stable) {
                err << "warning: closed loop is not stable\n";
                return 2;
            }
            return 0;
        }

        if (cmd_bode->parsed()) {
            const TransferFunction plant = detail_cli::make_plant(plant_args);
            PidGains gains{kp, ki, kd};
            if (tune_first) {
                const TuneResult r = tune(plant, spec);
                gains = r.gains;
                err << "tuned gains: kp=" << detail_cli::num_str(gains.kp)
                    << " ki=" << detail_cli::num_str(gains.ki)
                    << " kd=" << detail_cli::num_str(gains.kd) << "\n";
            }
            const TransferFunction loop = series(pid_tf(gains), plant);
            const std::vector<BodePoint> grid_pts = bode_grid(loop, w_min, w_max, ppd);

            detail_cli::PayloadSink sink(out_path, out);
            std::ostream& os = sink.stream();
            os << "w_rad_s,mag_db,phase_deg\n";
            for (const BodePoint& p : grid_pts)
                os << detail_cli::num_str(p.w) << "," << detail_cli::num_str(p.mag_db) << ","
                   << detail_cli::num_str(p.phase_deg) << "\n";

            bool stable = false;
            try {
                stable = is_stable(feedback_unity(loop));
            } catch (const std::exception&) {
            }
            if (!stable) {
                err << "warning: closed loop is not stable\n";
                return 2;
            }
            return 0;
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    err << "error: no subcommand given\n";
    return 1;
}

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<std::string> full;
    full.reserve(args.size() + 1);
    full.emplace_back("pmwc");
    full.insert(full.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    argv.reserve(full.size());
    for (const std::string& s : full) argv.push_back(s.c_str());
    return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace pmwc::cli
