#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>

#include "lagrangeforge/error.hpp"
#include "model.hpp"
#include "output.hpp"
#include "presets.hpp"

namespace lagrangeforge::cli {

namespace {

namespace fs = std::filesystem;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kSyntax:
    case ErrorCode::kUnknownIdentifier:
    case ErrorCode::kSchema:
    case ErrorCode::kUnknownPreset:
    case ErrorCode::kIo:
      return kExitInputError;
    case ErrorCode::kInadmissible:
    case ErrorCode::kBadExponent:
    case ErrorCode::kConstraintViolated:
    case ErrorCode::kZeroCrossing:
    case ErrorCode::kNotInvariant:
    case ErrorCode::kUnsupported:
      return kExitInapplicable;
    default:
      return kExitVerificationFailed;
  }
}

Json error_json(const Error& e) {
  return {{"code", std::string(error_code_name(e.code()))}, {"message", e.what()}};
}

Json point_json(const Point& p) { return {{"x", p.x}, {"v", p.v}, {"t", p.t}}; }

// Numbers in the report: NaN and infinities are written as null.
Json number(double value) { return std::isfinite(value) ? Json(value) : Json(nullptr); }

std::string status_text(int code) {
  switch (code) {
    case kExitPass:
      return "pass";
    case kExitVerificationFailed:
      return "verification-failed";
    case kExitInapplicable:
      return "inapplicable";
    default:
      return "input-error";
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read spec file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Json parse_json(const std::string& text, const std::string& origin) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::kSchema, origin + ": invalid JSON (" + e.what() + ")");
  }
}

Json load_document(const CommandOptions& o) {
  if (o.command == "demo" && !fs::exists(o.spec)) {
    const auto text = preset_text(o.spec);
    if (!text) {
      std::string list;
      for (const auto& n : preset_names()) list += (list.empty() ? "" : ", ") + n;
      throw Error(ErrorCode::kUnknownPreset,
                  "unknown preset '" + o.spec + "'; available presets: " + list);
    }
    return parse_json(*text, "preset " + o.spec);
  }
  return parse_json(read_file(o.spec), o.spec);
}

// Notes naming the corrected constructions that a Lagrangian relies on.
std::vector<std::string> discrepancy_notes(const std::string& family) {
  if (family == "reciprocal-linear") {
    return {"reciprocal-linear: auxiliary equation w'' = (b/3) w' + (2 b'/3 + 2 b^2/9 - c) w "
            "with f = w^3 and g = (2 f b - f')/3 (printed quadrature form is not a Lagrangian)"};
  }
  if (family == "reciprocal-nu2") {
    return {"reciprocal nu=2: G = exp(+int b), F = exp(2 int a + 3 int b) (printed signs fail)"};
  }
  if (family == "radical-equal") {
    return {"radical mu=nu: S = -nu int b exp(-nu int a) + s0 (printed sign fails)",
            "power friction x'' + b v^m = 0 corresponds to nu = m - 1 (printed m + 1 fails)"};
  }
  if (family == "composed") {
    return {"composition F(I) requires a true invariant I; for x'' + k x'^2 = 0 that is "
            "v e^(k x), not the printed v e^(k t)"};
  }
  return {};
}

struct Run {
  CommandOptions options;
  std::optional<ProblemSpec> spec;
  std::optional<Problem> problem;
  fs::path out_dir;
  Json report;
  Json timing = Json::object();
  int exit_code = kExitPass;
  std::vector<BuiltLagrangian> built;
  std::set<std::string> notes;

  void worsen(int code) { exit_code = std::max(exit_code, code); }

  template <class F>
  void timed(const std::string& task, F&& body) {
    const auto start = std::chrono::steady_clock::now();
    body();
    timing[task] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }

  void write(const std::string& file, const std::string& content) {
    write_atomic(out_dir / file, content);
    report["artifacts"].push_back(file);
  }

  // ---- tasks -------------------------------------------------------------

  void classify_task() {
    const auto rows = classify(*problem, spec->builder);
    CsvTable csv({"family", "applicable", "residual", "detail"});
    Json list = Json::array();
    bool any = false;
    bool requested = false;
    for (const auto& c : rows) {
      list.push_back({{"family", c.family},
                      {"applicable", c.applicable},
                      {"residual", number(c.residual)},
                      {"detail", c.detail}});
      csv.add_row({c.family, c.applicable ? "true" : "false", number_text(c.residual), c.detail});
      any = any || c.applicable;
      if (spec->builder && spec->builder->family == c.family) requested = c.applicable;
    }
    report["classification"] = list;
    write("classification.csv", csv.str());
    const bool ok = spec->builder ? requested : any;
    if (!ok) worsen(kExitInapplicable);
  }

  std::vector<LagrangianEntry> requested_lagrangians() {
    std::vector<LagrangianEntry> entries;
    if (spec->builder) entries.push_back({"L", std::nullopt, spec->builder});
    for (const auto& e : spec->lagrangians) entries.push_back(e);
    if (entries.empty()) {
      // No construction requested: take the first applicable family.
      for (const auto& c : classify(*problem, std::nullopt)) {
        if (!c.applicable) continue;
        BuilderSpec b;
        b.family = c.family;
        entries.push_back({"L", std::nullopt, b});
        break;
      }
      if (entries.empty()) {
        throw Error(ErrorCode::kInadmissible, "no constructor family applies to this equation");
      }
    }
    return entries;
  }

  void build_task() {
    if (!built.empty() || report.contains("lagrangians")) return;
    Json list = Json::array();
    for (const LagrangianEntry& entry : requested_lagrangians()) {
      Json item = {{"name", entry.name}};
      try {
        BuiltLagrangian b = entry.builder ? build_lagrangian(*problem, *entry.builder, entry.name)
                                          : explicit_lagrangian(*problem, entry);
        const std::string family = entry.builder ? entry.builder->family : "explicit";
        item["family"] = family;
        item["expression"] = format(b.lagrangian.expr);
        Json gauge = Json::object();
        for (const auto& [k, value] : b.lagrangian.gauge) gauge[k] = value;
        item["gauge"] = gauge;
        item["notes"] = b.lagrangian.notes;
        Json excl = Json::array();
        for (const Exclusion& ex : b.lagrangian.domain.exclusions) {
          excl.push_back({{"label", ex.label}, {"guard", format(ex.guard)}, {"radius", ex.radius}});
        }
        item["exclusions"] = excl;
        if (b.hamiltonian) item["hamiltonian"] = *b.hamiltonian;
        if (b.constraint_residual) item["constraint_residual"] = *b.constraint_residual;
        for (const auto& n : discrepancy_notes(family)) notes.insert(n);
        for (const auto& n : b.lagrangian.notes) notes.insert(n);
        built.push_back(std::move(b));
      } catch (const Error& e) {
        item["error"] = error_json(e);
        worsen(exit_code_for(e.code()));
      }
      list.push_back(item);
    }
    report["lagrangians"] = list;
  }

  void verify_task() {
    build_task();
    CsvTable csv({"name", "max_rel_residual", "worst_x", "worst_v", "worst_t", "samples",
                  "regularity_min", "tolerance", "pass"});
    Json list = Json::array();
    for (const BuiltLagrangian& b : built) {
      Json item = {{"name", b.name}};
      try {
        const VerificationReport r =
            el_residual_field(b.lagrangian, problem->ode, b.lagrangian.domain,
                              spec->verification_tol());
        item.update({{"max_rel_residual", number(r.max_rel_residual)},
                     {"worst_point", point_json(r.argmax)},
                     {"samples", r.samples_used},
                     {"regularity_min", number(r.regularity_min)},
                     {"tolerance", r.tolerance},
                     {"pass", r.pass}});
        csv.add_row({b.name, number_text(r.max_rel_residual), number_text(r.argmax.x),
                     number_text(r.argmax.v), number_text(r.argmax.t),
                     std::to_string(r.samples_used), number_text(r.regularity_min),
                     number_text(r.tolerance), r.pass ? "true" : "false"});
        if (!r.pass) worsen(kExitVerificationFailed);
      } catch (const Error& e) {
        item["error"] = error_json(e);
        item["pass"] = false;
        csv.add_row({b.name, "", "", "", "", "", "", number_text(spec->verification_tol()),
                     "false"});
        worsen(exit_code_for(e.code()));
      }
      list.push_back(item);
    }
    report["verification"] = list;
    write("residual_summary.csv", csv.str());
  }

  void integrate_task() {
    // The trajectory does not need a Lagrangian; monitored quantities use the
    // ones that could be built.
    if (spec->builder || !spec->lagrangians.empty()) {
      const int before = exit_code;
      build_task();
      exit_code = before;  // build problems are reported by the build task itself
    }
    const Trajectory traj = integrate_ode(problem->ode, spec->x0(), spec->v0(), spec->t0(),
                                          spec->t1(), spec->integrator());
    Json info = {{"x0", spec->x0()},
                 {"v0", spec->v0()},
                 {"t0", spec->t0()},
                 {"t1", spec->t1()},
                 {"method", spec->integration.method},
                 {"steps", traj.stats.steps},
                 {"rejected", traj.stats.rejected},
                 {"max_error_estimate", number(traj.stats.max_error_estimate)}};
    const Lagrangian* first = built.empty() ? nullptr : &built.front().lagrangian;
    std::vector<std::string> header = {"t", "x", "v"};
    if (first) header.insert(header.end(), {"L", "E", "p"});
    CsvTable csv(header);
    const int n = spec->integration.samples;
    for (int i = 0; i < n; ++i) {
      const double t = i + 1 == n ? spec->t1()
                                  : spec->t0() + (spec->t1() - spec->t0()) * i / (n - 1);
      const Point p = traj.state_at(t);
      std::vector<std::string> row = {number_text(p.t), number_text(p.x), number_text(p.v)};
      if (first) {
        auto cell = [&](auto&& f) {
          try {
            return number_text(f());
          } catch (const Error&) {
            return std::string();
          }
        };
        row.push_back(cell([&] { return eval(first->expr, first->binding(p)); }));
        row.push_back(cell([&] { return energy_function(*first, p); }));
        row.push_back(cell([&] { return legendre_momentum(*first, p); }));
      }
      csv.add_row(std::move(row));
    }
    Json monitors = Json::array();
    for (const BuiltLagrangian& b : built) {
      Json item = {{"name", b.name}};
      try {
        const Expr& L = b.lagrangian.expr;
        const Expr E = var(Variable::kV) * differentiate(L, Variable::kV) - L;
        const MonitorSeries ml = monitor_quantity(traj, L, b.lagrangian.params);
        const MonitorSeries me = monitor_quantity(traj, E, b.lagrangian.params);
        item["lagrangian_drift"] = number(ml.max_drift);
        item["energy_drift"] = number(me.max_drift);
      } catch (const Error& e) {
        item["error"] = error_json(e);
      }
      monitors.push_back(item);
    }
    info["monitors"] = monitors;
    report["integration"] = info;
    write("trajectory.csv", csv.str());
  }

  void compare_task() {
    build_task();
    if (built.size() < 2) {
      throw Error(ErrorCode::kSchema, "compare needs at least two Lagrangians that build");
    }
    constexpr double kTol = 1e-8;
    std::vector<std::string> header = {"name"};
    for (const auto& b : built) header.push_back(b.name);
    CsvTable csv(header);
    Json pairs = Json::array();
    bool all = true;
    std::vector<std::vector<std::string>> cells(built.size(),
                                                std::vector<std::string>(built.size(), "0"));
    for (std::size_t i = 0; i < built.size(); ++i) {
      for (std::size_t j = i + 1; j < built.size(); ++j) {
        Json item = {{"first", built[i].name}, {"second", built[j].name}};
        try {
          const EquivalenceReport r = equivalence_check(built[i].lagrangian, built[j].lagrangian,
                                                        problem->box, kTol);
          item.update({{"max_rel_difference", number(r.max_rel_difference)},
                       {"worst_point", point_json(r.argmax)},
                       {"samples", r.samples_used},
                       {"equivalent", r.equivalent}});
          cells[i][j] = cells[j][i] = number_text(r.max_rel_difference);
          all = all && r.equivalent;
        } catch (const Error& e) {
          item["error"] = error_json(e);
          item["equivalent"] = false;
          cells[i][j] = cells[j][i] = "";
          all = false;
        }
        pairs.push_back(item);
      }
    }
    for (std::size_t i = 0; i < built.size(); ++i) {
      std::vector<std::string> row = {built[i].name};
      row.insert(row.end(), cells[i].begin(), cells[i].end());
      csv.add_row(std::move(row));
    }
    report["comparison"] = {{"tolerance", kTol}, {"all_equivalent", all}, {"pairs", pairs}};
    write("equivalence.csv", csv.str());
    if (!all) worsen(kExitVerificationFailed);
  }

  std::vector<std::string> tasks() const {
    const std::string& c = options.command;
    if (c == "classify") return {"classify"};
    if (c == "build") return {"build"};
    if (c == "verify") return {"verify"};
    if (c == "integrate") return {"integrate"};
    if (c == "compare") return {"compare"};
    if (!spec->tasks.empty()) return spec->tasks;
    std::vector<std::string> all = {"classify", "build", "verify", "integrate"};
    if (spec->lagrangians.size() + (spec->builder ? 1 : 0) >= 2) all.push_back("compare");
    return all;
  }

  void execute() {
    report = {{"tool", "lagrangeforge"}, {"command", options.command}, {"spec", nullptr}};
    report["artifacts"] = Json::array();
    try {
      ProblemSpec s = parse_problem_spec(load_document(options));
      if (options.seed) s.domain.seed = *options.seed;
      if (options.tol) s.tol = *options.tol;
      spec = std::move(s);
      report["spec"] = normalized_spec(*spec);
      out_dir = options.out_dir ? fs::path(*options.out_dir)
                                : fs::path(spec->output_dir.value_or("lagrangeforge-out"));
      problem.emplace(*spec);
      for (const std::string& task : tasks()) {
        timed(task, [&] {
          if (task == "classify") classify_task();
          if (task == "build") build_task();
          if (task == "verify") verify_task();
          if (task == "integrate") integrate_task();
          if (task == "compare") compare_task();
        });
      }
    } catch (const Error& e) {
      report["error"] = error_json(e);
      worsen(exit_code_for(e.code()));
    }
    if (out_dir.empty()) out_dir = options.out_dir.value_or("lagrangeforge-out");
    report["discrepancy_notes"] = std::vector<std::string>(notes.begin(), notes.end());
    report["status"] = status_text(exit_code);
    report["exit_code"] = exit_code;
    report["artifacts"].push_back("report.json");
    report["artifacts"].push_back("timing.json");
    write_atomic(out_dir / "timing.json", timing.dump(2) + "\n");
    write_atomic(out_dir / "report.json", report.dump(2) + "\n");
  }
};

void print_summary(const Run& run) {
  std::cout << "lagrangeforge " << run.options.command << ": " << status_text(run.exit_code)
            << " (exit " << run.exit_code << ")\n";
  if (run.report.contains("lagrangians")) {
    for (const auto& l : run.report["lagrangians"]) {
      std::cout << "  " << l["name"].get<std::string>() << ": "
                << (l.contains("expression") ? l["expression"].get<std::string>()
                                             : "error: " + l["error"]["message"].get<std::string>())
                << "\n";
    }
  }
  if (run.report.contains("error")) {
    std::cerr << "error [" << run.report["error"]["code"].get<std::string>()
              << "]: " << run.report["error"]["message"].get<std::string>() << "\n";
  }
  std::cout << "  report: " << (run.out_dir / "report.json").string() << "\n";
}

}  // namespace

int run_command(const CommandOptions& options) {
  Run run;
  run.options = options;
  try {
    run.execute();
  } catch (const Error& e) {
    // Only reachable when the report itself cannot be written.
    std::cerr << "error [" << error_code_name(e.code()) << "]: " << e.what() << "\n";
    return kExitInputError;
  }
  print_summary(run);
  return run.exit_code;
}

}  // namespace lagrangeforge::cli
