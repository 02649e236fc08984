// plap command-line front end.
//
// Exit codes: 0 ok, 2 configuration error, 3 solver failure,
// 4 acceptance/property failure.

#include <plap/config.hpp>
#include <plap/errors.hpp>
#include <plap/experiments.hpp>
#include <plap/inequalities.hpp>
#include <plap/parallel.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace plap;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;
constexpr int kExitProperty = 4;

struct Overrides {
    std::optional<std::string> config;
    std::optional<double> p;
    std::optional<double> tau;
    std::optional<double> lambda;
    std::optional<std::uint64_t> seed;
    std::optional<int> mesh_n;
    std::optional<int> cells;
    std::optional<std::string> param;
    std::optional<std::string> sample;
    std::optional<std::string> out;
    std::optional<unsigned> threads;
    std::optional<std::string> current;
    std::optional<std::size_t> samples;
    std::optional<std::size_t> member;
};

void add_common(CLI::App* app, Overrides& o)
{
    app->add_option("--config", o.config, "key = value config file or JSON manifest");
    app->add_option("--p", o.p, "exponent p > 1");
    app->add_option("--tau", o.tau, "smoothing parameter tau >= 0");
    app->add_option("--lambda", o.lambda, "noise level (0: the sample's own)");
    app->add_option("--seed", o.seed, "base RNG seed");
    app->add_option("--mesh-n", o.mesh_n, "boundary nodes of the disk mesh");
    app->add_option("--cells", o.cells, "number of conductivity cells");
    app->add_option("--param", o.param, "parametrization")->check(CLI::IsMember({"std", "inv", "nat", "exp"}));
    app->add_option("--sample", o.sample, "prior configuration")->check(CLI::IsMember({"A", "B", "C", "D", "E", "F"}));
    app->add_option("--out", o.out, "output directory");
    app->add_option("--threads", o.threads, "worker threads (0: all cores)");
}

RunConfig resolve(const Overrides& o, const std::string& command)
{
    RunConfig c = o.config ? load_config(*o.config) : RunConfig{};
    auto set = [&](const char* key, const auto& value) {
        if (value) {
            std::ostringstream os;
            os << std::setprecision(17) << *value;
            apply_setting(c, key, os.str());
        }
    };
    set("p", o.p);
    set("tau", o.tau);
    set("lambda", o.lambda);
    set("seed", o.seed);
    set("mesh_n", o.mesh_n);
    set("cells", o.cells);
    set("param", o.param);
    set("sample", o.sample);
    set("out", o.out);
    set("threads", o.threads);
    set("current", o.current);
    if (o.samples) {
        set(command == "proptest" ? "proptest_samples" : "members", o.samples);
    }
    validate(c);
    set_thread_count(c.threads);
    return c;
}

std::ofstream open_output(const fs::path& path)
{
    fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) {
        throw ConfigError("cannot write '" + path.string() + "'");
    }
    return out;
}

void write_manifest(const RunConfig& c, const std::string& command, const nlohmann::json& extra = {})
{
    nlohmann::json j = nlohmann::json::parse(config_to_json(c));
    j["command"] = command;
    auto out = open_output(fs::path(c.out) / "manifest.json");
    out << j.dump(2) << "\n";
    if (!extra.is_null()) {
        auto results = open_output(fs::path(c.out) / "results.json");
        results << extra.dump(2) << "\n";
    }
}

double lambda_of(const RunConfig& c)
{
    return c.lambda > 0.0 ? c.lambda : sample_config(c.sample).lambda;
}

Eigen::VectorXd member_kappa(const RunConfig& c, const Partition& partition, std::optional<std::size_t> member)
{
    if (!member) {
        return Eigen::VectorXd::Zero(static_cast<Eigen::Index>(partition.cell_count()));
    }
    const SampleConfig& sc = sample_config(c.sample);
    const CovarianceModel cov = covariance_matrix(partition, sc.varsigma2, sc.b);
    return GaussianSampler(cov).draw(derive_seed(derive_seed(c.seed, sc.name), *member));
}

int cmd_mesh_build(const RunConfig& c)
{
    const auto disc = Discretization::disk(c.mesh_n, c.cells, c.rings);
    disc->mesh().validate();
    auto out = open_output(fs::path(c.out) / "mesh.txt");
    write_mesh(out, disc->mesh(), &disc->partition());
    std::cout << "nodes " << disc->mesh().node_count() << "\n"
              << "triangles " << disc->mesh().triangle_count() << "\n"
              << "cells " << disc->partition().cell_count() << "\n"
              << "hash " << disc->mesh().hash_hex() << "\n";
    write_manifest(c, "mesh-build", {{"mesh", disc->mesh().hash_hex()}, {"nodes", disc->mesh().node_count()}});
    return 0;
}

int cmd_solve(const RunConfig& c, std::optional<std::size_t> member)
{
    const auto disc = Discretization::disk(c.mesh_n, c.cells, c.rings);
    const auto f = BoundaryCurrent::parse(c.current, disc->mesh().boundary_count());
    const auto kappa = member_kappa(c, disc->partition(), member);
    SolverOptions options;
    options.on_iteration = [](const NewtonLogEntry& e) {
        std::cout << "newton p=" << e.p << " step=" << e.step << " residual=" << e.residual
                  << " damping=" << e.damping << " energy=" << std::setprecision(12) << e.energy
                  << std::setprecision(6) << "\n";
    };
    const ForwardSolution sol = solve_forward(disc->space(), disc->partition(), ConductivityField::from_log(kappa),
                                              EnergyParams(c.p, c.tau), f, options);
    const Eigen::VectorXd coeffs = project_trace(boundary_trace(disc->mesh(), sol.u), c.j_max);
    {
        auto out = open_output(fs::path(c.out) / "solution.txt");
        out << "# plap solution v1 mesh=" << disc->mesh().hash_hex() << " p=" << c.p << " tau=" << c.tau
            << " current=" << f.label() << "\n";
        out << "node,x,y,u\n" << std::setprecision(17);
        for (std::size_t i = 0; i < disc->mesh().node_count(); ++i) {
            const auto& x = disc->mesh().nodes()[i];
            out << i << ',' << x.x() << ',' << x.y() << ',' << sol.u.values(static_cast<Eigen::Index>(i)) << "\n";
        }
    }
    nlohmann::json coef;
    {
        auto out = open_output(fs::path(c.out) / "trace.csv");
        out << "coef,value\n" << std::setprecision(17);
        for (Eigen::Index k = 0; k < coeffs.size(); ++k) {
            const auto label = trig_label(static_cast<std::size_t>(k));
            out << label << ',' << coeffs(k) << "\n";
            coef[label] = coeffs(k);
        }
    }
    std::cout << std::setprecision(10);
    for (Eigen::Index k = 0; k < coeffs.size(); ++k) {
        std::cout << "coef " << trig_label(static_cast<std::size_t>(k)) << " = " << coeffs(k) << "\n";
    }
    std::cout << "steps " << sol.report.steps << " (+" << sol.report.continuation_steps << " continuation)"
              << " residual " << sol.report.residual << "\n";
    write_manifest(c, "solve", {{"coefficients", coef}, {"steps", sol.report.steps}, {"residual", sol.report.residual}});
    return 0;
}

int cmd_jacobian(const RunConfig& c)
{
    const auto disc = Discretization::disk(c.mesh_n, c.cells, c.rings);
    const MeasurementModel model(disc->space(), disc->partition(), c.j_max);
    const auto sigma0 = ConductivityField::constant(disc->partition().cell_count(), 1.0);
    const JacobianMatrix j = assemble_jacobian(model, sigma0, EnergyParams(c.p, c.tau), c.param);
    auto out = open_output(fs::path(c.out) / "jacobian.csv");
    write_jacobian_csv(out, j);
    std::cout << "jacobian " << j.entries.rows() << "x" << j.entries.cols() << " param=" << to_string(c.param)
              << " norm=" << j.entries.norm() << "\n";
    write_manifest(c, "jacobian", {{"rows", j.entries.rows()}, {"cols", j.entries.cols()}, {"mesh", j.mesh_hash}});
    return 0;
}

int cmd_proptest(const RunConfig& c)
{
    InequalityOptions options;
    options.samples = c.proptest_samples;
    options.seed = c.seed;
    options.p_min = c.proptest_p_min;
    options.p_max = c.proptest_p_max;
    const InequalityReport report = verify_inequalities(options);
    nlohmann::json items = nlohmann::json::array();
    for (const auto& item : report.items) {
        std::cout << std::left << std::setw(28) << item.id << " checked " << item.checked << " violations "
                  << item.violations << " worst margin " << std::scientific << std::setprecision(3)
                  << item.worst_margin << std::defaultfloat;
        if (item.calibrated) {
            std::cout << " constant " << item.constant;
        }
        std::cout << "\n";
        items.push_back({{"id", item.id}, {"checked", item.checked}, {"violations", item.violations},
                         {"worst_margin", item.worst_margin}, {"calibrated", item.calibrated},
                         {"constant", item.constant}});
    }
    std::cout << (report.passed() ? "PASS" : "FAIL") << ": " << report.total_violations() << " violations over "
              << report.samples << " tuples\n";
    write_manifest(c, "proptest", {{"passed", report.passed()}, {"items", items}});
    return report.passed() ? 0 : kExitProperty;
}

int cmd_sample(const RunConfig& c)
{
    const PolarGrid grid(c.rings, c.cells);
    const SampleConfig& sc = sample_config(c.sample);
    const CovarianceModel cov = covariance_matrix(grid.centroids(), sc.varsigma2, sc.b);
    const auto kappas = sample_logconductivity(cov, c.members, derive_seed(c.seed, sc.name));
    auto out = open_output(fs::path(c.out) / "samples.csv");
    write_samples_csv(out, kappas);
    const double stat = mean_norm_statistic(kappas);
    std::cout << "sample " << c.sample << " members " << kappas.size() << " cells " << grid.cell_count()
              << " sqrt(pi/M) E|kappa| = " << stat << "\n";
    write_manifest(c, "sample", {{"statistic", stat}});
    return 0;
}

int cmd_linerr(const RunConfig& c)
{
    const auto disc = Discretization::disk(c.mesh_n, c.cells, c.rings);
    const MeasurementModel model(disc->space(), disc->partition(), c.j_max);
    const SampleConfig& sc = sample_config(c.sample);
    const CovarianceModel cov = covariance_matrix(disc->partition(), sc.varsigma2, sc.b);
    const auto kappas = sample_logconductivity(cov, c.members, derive_seed(c.seed, sc.name));
    const EnergyParams params(c.p, c.tau);
    const auto jac = assemble_jacobians(model, ConductivityField::constant(disc->partition().cell_count(), 1.0), params);
    const auto clean = simulate_data(model, params, kappas);
    const LinearizationResult res = linearization_error(clean, jac, kappas, c.p);
    auto out = open_output(fs::path(c.out) / "linerr.csv");
    out << "# schema=plap-linerr-v1\nsample,param,p,tau,e,members,skipped\n" << std::setprecision(17);
    nlohmann::json e;
    for (auto param : kAllParametrizations) {
        out << c.sample << ',' << to_string(param) << ',' << c.p << ',' << c.tau << ',' << res[param] << ','
            << res.members << ',' << res.skipped << "\n";
        std::cout << "e_" << to_string(param) << " = " << res[param] << "\n";
        e[std::string(to_string(param))] = res[param];
    }
    write_manifest(c, "linerr", {{"e", e}, {"skipped", res.skipped}});
    enforce_skip_policy(res.skipped, kappas.size(), c.max_skip_fraction);
    return 0;
}

int cmd_invert(const RunConfig& c)
{
    const auto reference = Discretization::disk(c.mesh_n, c.cells, c.rings);
    const auto perturbed = c.perturb_data_mesh ? Discretization::disk(c.mesh_n, c.cells, c.rings, c.mesh_seed) : nullptr;
    const Discretization& data_disc = perturbed ? *perturbed : *reference;
    const MeasurementModel model(reference->space(), reference->partition(), c.j_max);
    const MeasurementModel data_model(data_disc.space(), data_disc.partition(), c.j_max);
    const SampleConfig& sc = sample_config(c.sample);
    const CovarianceModel cov = covariance_matrix(reference->partition(), sc.varsigma2, sc.b);
    const auto kappas = sample_logconductivity(cov, c.members, derive_seed(c.seed, sc.name));
    const double lambda = lambda_of(c);
    const EnergyParams params(c.p, c.tau);
    const auto jac =
        assemble_jacobians(model, ConductivityField::constant(reference->partition().cell_count(), 1.0), params);
    const auto data = simulate_data(data_model, params, kappas, lambda, derive_seed(c.noise_seed, sc.name));

    ReconstructionOptions options;
    options.penalty = c.penalty;
    options.params = {c.param};
    options.snapshots = kappas.size();
    const ReconstructionResult res = reconstruction_error(data, jac, c.p, cov, kappas, lambda, options);
    const auto k = static_cast<int>(c.param);
    std::vector<Eigen::VectorXd> truth;
    for (std::size_t i = 0; i < kappas.size() && truth.size() < res.snapshots[k].size(); ++i) {
        if (data.values[i]) {
            truth.push_back(kappas[i]);
        }
    }
    {
        auto out = open_output(fs::path(c.out) / "reconstructions.csv");
        write_reconstruction_csv(out, truth, res.snapshots[k]);
    }
    {
        ReconstructionRecord record{c.sample, c.param, c.p, c.tau, lambda, c.seed,
                                    data_disc.mesh().hash_hex(), reference->mesh().hash_hex()};
        auto out = open_output(fs::path(c.out) / "reconstruction.json");
        out << reconstruction_manifest(record) << "\n";
    }
    std::cout << "iota_" << to_string(c.param) << " = " << res.iota[k] << " (members " << res.members << ", clipped "
              << res.clipped[k] << ")\n";
    write_manifest(c, "invert", {{"iota", res.iota[k]}, {"clipped", res.clipped[k]}, {"skipped", res.skipped}});
    enforce_skip_policy(res.skipped, kappas.size(), c.max_skip_fraction);
    return 0;
}

int cmd_sweep(const RunConfig& c)
{
    std::cout << "estimated wall time " << static_cast<long>(estimate_sweep_seconds(c)) << " s\n";
    const SweepTables tables = sweep(c, [](const std::string& msg) { std::cout << msg << std::endl; });
    write_sweep(tables, c, c.out);
    for (const auto& t : tables.trends) {
        std::cout << "trend " << t.study << ' ' << t.sample << ' ' << to_string(t.param)
                  << (t.variant.empty() ? "" : " " + t.variant) << " tau=" << t.tau
                  << (t.increases == 0 ? " non-increasing" : " increases=" + std::to_string(t.increases)) << "\n";
    }
    if (!tables.aborted.empty()) {
        std::cerr << "sweep aborted: " << tables.aborted << "\n";
        return kExitSolver;
    }
    return 0;
}

int exit_code(const Error& e)
{
    switch (e.category()) {
    case ErrorCategory::config:
        return kExitConfig;
    case ErrorCategory::property:
        return kExitProperty;
    default:
        return kExitSolver;
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"plap: smoothed weighted p-Laplace Neumann toolkit"};
    app.require_subcommand(1);
    Overrides o;

    auto* mesh_build = app.add_subcommand("mesh-build", "build the disk mesh and cell partition");
    auto* solve = app.add_subcommand("solve", "solve the forward problem for one current");
    auto* jacobian = app.add_subcommand("jacobian", "assemble the Jacobian at sigma = 1");
    auto* proptest = app.add_subcommand("proptest", "run the energy-kernel inequality suite");
    auto* sample = app.add_subcommand("sample", "draw log-conductivity samples");
    auto* linerr = app.add_subcommand("linerr", "mean relative linearization error");
    auto* invert = app.add_subcommand("invert", "one-step MAP reconstructions");
    auto* sweep_cmd = app.add_subcommand("sweep", "run a configured experiment sweep");
    for (auto* sub : {mesh_build, solve, jacobian, proptest, sample, linerr, invert, sweep_cmd}) {
        add_common(sub, o);
    }
    solve->add_option("--current", o.current, "boundary current, e.g. cos1 or sin3");
    solve->add_option("--member", o.member, "use this member of --sample instead of kappa = 0");
    for (auto* sub : {proptest, sample, linerr, invert}) {
        sub->add_option("--samples", o.samples, "tuples (proptest) or members");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        const std::string name = app.get_subcommands().front()->get_name();
        const RunConfig c = resolve(o, name);
        if (name == "mesh-build") {
            return cmd_mesh_build(c);
        }
        if (name == "solve") {
            return cmd_solve(c, o.member);
        }
        if (name == "jacobian") {
            return cmd_jacobian(c);
        }
        if (name == "proptest") {
            return cmd_proptest(c);
        }
        if (name == "sample") {
            return cmd_sample(c);
        }
        if (name == "linerr") {
            return cmd_linerr(c);
        }
        if (name == "invert") {
            return cmd_invert(c);
        }
        return cmd_sweep(c);
    } catch (const Error& e) {
        std::cerr << "error [" << e.what() << "]\n";
        return exit_code(e);
    } catch (const std::exception& e) {
        std::cerr << "error [" << e.what() << "]\n";
        return kExitSolver;
    }
}
