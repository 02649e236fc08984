#include <plap/experiments.hpp>

#include <plap/errors.hpp>
#include <plap/parallel.hpp>

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <tuple>

namespace plap {

Discretization::Discretization(MeshGeometry mesh, int rings, int cells)
    : mesh_(std::move(mesh)), partition_(build_partition(mesh_, rings, cells)), space_(mesh_)
{
}

std::unique_ptr<Discretization> Discretization::disk(int boundary_nodes, int cells, int rings,
                                                     std::optional<std::uint64_t> perturb_seed)
{
    MeshGeometry mesh = build_disk_mesh(boundary_nodes);
    if (perturb_seed) {
        mesh = perturb_mesh(mesh, *perturb_seed);
    }
    return std::make_unique<Discretization>(std::move(mesh), rings, cells);
}

SimulatedData simulate_data(const MeasurementModel& model, const EnergyParams& params,
                            const std::vector<Eigen::VectorXd>& kappas, double lambda, std::uint64_t noise_seed)
{
    SimulatedData out;
    out.values.resize(kappas.size());
    std::vector<std::string> errors(kappas.size());
    parallel_for(kappas.size(), [&](std::size_t i) {
        try {
            MeasurementVector u = model.simulate(ConductivityField::from_log(kappas[i]), params);
            if (lambda > 0.0) {
                u = add_noise(u, lambda, derive_seed(noise_seed, i));
            }
            out.values[i] = std::move(u);
        } catch (const NewtonDivergence& e) {
            errors[i] = e.what();
        } catch (const SingularTangent& e) {
            errors[i] = e.what();
        }
    });
    for (std::size_t i = 0; i < errors.size(); ++i) {
        if (!errors[i].empty()) {
            out.failures.push_back({i, errors[i]});
        }
    }
    return out;
}

LinearizationResult linearization_error(const SimulatedData& clean, const JacobianSet& jacobians,
                                        const std::vector<Eigen::VectorXd>& kappas, double p)
{
    if (clean.values.size() != kappas.size()) {
        throw InvalidArgument("data and sample sizes differ");
    }
    LinearizationResult out;
    out.failures = clean.failures;
    std::array<Eigen::VectorXd, 4> x0;
    for (auto param : kAllParametrizations) {
        const auto k = static_cast<int>(param);
        x0[k] = Eigen::VectorXd::Constant(jacobians[param].entries.cols(), base_value(param));
    }
    // Ordered accumulation keeps the sums independent of the thread count.
    for (std::size_t i = 0; i < kappas.size(); ++i) {
        if (!clean.values[i]) {
            ++out.skipped;
            continue;
        }
        const Eigen::VectorXd& u = clean.values[i]->values;
        const double norm = u.norm();
        for (auto param : kAllParametrizations) {
            const auto k = static_cast<int>(param);
            const Eigen::VectorXd x = from_log_conductivity(kappas[i], param, p);
            const Eigen::VectorXd remainder =
                u - jacobians.base.values - jacobians[param].entries * (x - x0[k]);
            out.e[k] += remainder.norm() / norm;
        }
        ++out.members;
    }
    if (out.members > 0) {
        for (double& e : out.e) {
            e /= static_cast<double>(out.members);
        }
    }
    return out;
}

ReconstructionResult reconstruction_error(const SimulatedData& data, const JacobianSet& jacobians, double reco_p,
                                          const CovarianceModel& prior, const std::vector<Eigen::VectorXd>& kappas,
                                          double lambda, const ReconstructionOptions& options)
{
    if (data.values.size() != kappas.size()) {
        throw InvalidArgument("data and sample sizes differ");
    }
    ReconstructionResult out;
    out.failures = data.failures;
    for (const auto& v : data.values) {
        out.members += v ? 1 : 0;
    }
    out.skipped = kappas.size() - out.members;
    const double scale = std::sqrt(std::numbers::pi / static_cast<double>(prior.size()));
    for (auto param : options.params) {
        const auto k = static_cast<int>(param);
        const OneStepMap map(jacobians[param], parameter_prior(prior, param, reco_p), lambda, options.penalty);
        double sum = 0.0;
        for (std::size_t i = 0; i < kappas.size(); ++i) {
            if (!data.values[i]) {
                continue;
            }
            const Eigen::VectorXd x = map.reconstruct(*data.values[i], jacobians.base);
            const LogConductivity kappa = to_log_conductivity(x, param, reco_p, options.clip_floor);
            out.clipped[k] += kappa.clipped;
            sum += (kappas[i] - kappa.kappa).norm();
            if (out.snapshots[k].size() < options.snapshots) {
                out.snapshots[k].push_back(kappa.kappa);
            }
        }
        out.iota[k] = out.members > 0 ? scale * sum / static_cast<double>(out.members) : 0.0;
        out.computed[k] = true;
    }
    return out;
}

void enforce_skip_policy(std::size_t skipped, std::size_t members, double max_fraction)
{
    if (members > 0 && static_cast<double>(skipped) > max_fraction * static_cast<double>(members)) {
        throw NewtonDivergence(std::to_string(skipped) + " of " + std::to_string(members) +
                               " members failed, above the allowed fraction " + std::to_string(max_fraction));
    }
}

std::size_t count_increases(const std::vector<double>& curve)
{
    std::size_t n = 0;
    for (std::size_t i = 1; i < curve.size(); ++i) {
        if (curve[i] > curve[i - 1]) {
            ++n;
        }
    }
    return n;
}

double estimate_sweep_seconds(const RunConfig& config)
{
    // Roughly 3 microseconds per node and nonlinear solve on one core.
    const double nodes = 0.11 * config.mesh_n * config.mesh_n;
    const double per_solve = 3e-6 * nodes;
    const double currents = 2.0 * config.j_max;
    const auto grid = config.p_grid.empty() ? default_p_grid().size() : config.p_grid.size();
    const double points = static_cast<double>(config.samples.size() * config.tau_grid.size() * grid);
    const double studies = config.study == "both" ? 2.0 : 1.0;
    const double solves = points * currents * (studies * static_cast<double>(config.members) + 1.0);
    const double jacobian = points * currents * config.cells * per_solve * 0.05;
    return (solves * per_solve + jacobian) / std::max(1u, config.threads);
}

namespace {

void add_trends(SweepTables& tables)
{
    using Key = std::tuple<std::string, std::string, int, std::string, double>;
    std::map<Key, std::vector<double>> curves;
    for (const auto& r : tables.linerr) {
        curves[{"linerr", r.sample, static_cast<int>(r.param), "", r.tau}].push_back(r.e);
    }
    for (const auto& r : tables.invert) {
        curves[{"invert", r.sample, static_cast<int>(r.param), r.variant, r.tau}].push_back(r.iota);
    }
    for (const auto& [key, curve] : curves) {
        TrendRow row;
        std::tie(row.study, row.sample, std::ignore, row.variant, row.tau) = key;
        row.param = kAllParametrizations[std::get<2>(key)];
        row.increases = count_increases(curve);
        tables.trends.push_back(std::move(row));
    }
}

void record_failures(SweepTables& tables, const std::vector<MemberFailure>& failures, const std::string& sample,
                     double p, double tau, const std::string& study)
{
    for (const auto& f : failures) {
        tables.failures.push_back({sample, p, tau, study, f.member, f.what});
    }
}

} // namespace

SweepTables sweep(const RunConfig& config, const ProgressCallback& progress)
{
    validate(config);
    set_thread_count(config.threads);
    const std::vector<double> p_grid = config.p_grid.empty() ? default_p_grid() : config.p_grid;
    const bool linerr = config.study == "linerr" || config.study == "both";
    const bool invert = config.study == "invert" || config.study == "both";

    const auto reference = Discretization::disk(config.mesh_n, config.cells, config.rings);
    const auto perturbed = invert && config.perturb_data_mesh
                               ? Discretization::disk(config.mesh_n, config.cells, config.rings, config.mesh_seed)
                               : nullptr;
    const Discretization& data_disc = perturbed ? *perturbed : *reference;
    const MeasurementModel reference_model(reference->space(), reference->partition(), config.j_max);
    const MeasurementModel data_model(data_disc.space(), data_disc.partition(), config.j_max);
    const auto sigma0 = ConductivityField::constant(reference->partition().cell_count(), 1.0);

    ReconstructionOptions options;
    options.penalty = config.penalty;
    options.snapshots = config.snapshots;
    options.params = config.params;

    SweepTables tables;
    auto say = [&](const std::string& msg) {
        if (progress) {
            progress(msg);
        }
    };

    for (const auto& sample : config.samples) {
        const SampleConfig& sc = sample_config(sample);
        const CovarianceModel cov = covariance_matrix(reference->partition(), sc.varsigma2, sc.b);
        const auto kappas = sample_logconductivity(cov, config.members, derive_seed(config.seed, sc.name));
        const double lambda = config.lambda > 0.0 ? config.lambda : sc.lambda;
        const std::uint64_t noise_seed = derive_seed(config.noise_seed, sc.name);

        for (double tau : config.tau_grid) {
            std::optional<JacobianSet> p2;
            for (double p : p_grid) {
                const EnergyParams params(p, tau);
                std::ostringstream label;
                label << "sample " << sample << " p=" << p << " tau=" << tau;
                say(label.str());
                const JacobianSet jac = assemble_jacobians(reference_model, sigma0, params);
                try {
                    if (linerr) {
                        const SimulatedData clean = simulate_data(reference_model, params, kappas);
                        const LinearizationResult res = linearization_error(clean, jac, kappas, p);
                        record_failures(tables, res.failures, sample, p, tau, "linerr");
                        for (auto param : config.params) {
                            tables.linerr.push_back({sample, param, p, tau, res[param], res.members, res.skipped});
                        }
                        enforce_skip_policy(res.skipped, kappas.size(), config.max_skip_fraction);
                    }
                    if (invert) {
                        const SimulatedData data = simulate_data(data_model, params, kappas, lambda, noise_seed);
                        auto emit = [&](const ReconstructionResult& res, const std::string& variant) {
                            for (auto param : config.params) {
                                const auto k = static_cast<int>(param);
                                tables.invert.push_back({sample, param, variant, p, tau, lambda, res.iota[k],
                                                         res.members, res.skipped, res.clipped[k]});
                                for (std::size_t m = 0; m < res.snapshots[k].size(); ++m) {
                                    tables.snapshots.push_back(
                                        {sample, param, variant, p, tau, m, kappas[m], res.snapshots[k][m]});
                                }
                            }
                        };
                        const ReconstructionResult res =
                            reconstruction_error(data, jac, p, cov, kappas, lambda, options);
                        record_failures(tables, res.failures, sample, p, tau, "invert");
                        emit(res, "correct");
                        if (config.misspecified) {
                            if (!p2) {
                                p2 = assemble_jacobians(reference_model, sigma0, EnergyParams(2.0, tau));
                            }
                            emit(reconstruction_error(data, *p2, 2.0, cov, kappas, lambda, options), "p2");
                        }
                        enforce_skip_policy(res.skipped, kappas.size(), config.max_skip_fraction);
                    }
                } catch (const NewtonDivergence& e) {
                    tables.aborted = label.str() + ": " + e.what();
                    add_trends(tables);
                    return tables;
                }
            }
        }
    }
    add_trends(tables);
    return tables;
}

namespace {

std::ofstream open_output(const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out) {
        throw ConfigError("cannot write '" + path.string() + "'");
    }
    out.precision(17);
    return out;
}

} // namespace

void write_sweep(const SweepTables& tables, const RunConfig& config, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    {
        auto out = open_output(dir / "linerr.csv");
        out << "# schema=plap-linerr-v1\n";
        out << "sample,param,p,tau,e,members,skipped\n";
        for (const auto& r : tables.linerr) {
            out << r.sample << ',' << to_string(r.param) << ',' << r.p << ',' << r.tau << ',' << r.e << ','
                << r.members << ',' << r.skipped << "\n";
        }
    }
    {
        auto out = open_output(dir / "invert.csv");
        out << "# schema=plap-invert-v1\n";
        out << "sample,param,variant,p,tau,lambda,iota,members,skipped,clipped\n";
        for (const auto& r : tables.invert) {
            out << r.sample << ',' << to_string(r.param) << ',' << r.variant << ',' << r.p << ',' << r.tau << ','
                << r.lambda << ',' << r.iota << ',' << r.members << ',' << r.skipped << ',' << r.clipped << "\n";
        }
    }
    {
        auto out = open_output(dir / "trends.csv");
        out << "# schema=plap-trends-v1\n";
        out << "study,sample,param,variant,tau,increases,non_increasing\n";
        for (const auto& r : tables.trends) {
            out << r.study << ',' << r.sample << ',' << to_string(r.param) << ',' << r.variant << ',' << r.tau << ','
                << r.increases << ',' << (r.increases == 0 ? "true" : "false") << "\n";
        }
    }
    if (!tables.snapshots.empty()) {
        auto out = open_output(dir / "snapshots.csv");
        out << "# schema=plap-snapshots-v1\n";
        out << "sample,param,variant,p,tau,member,kind";
        for (Eigen::Index c = 0; c < tables.snapshots.front().truth.size(); ++c) {
            out << ",cell" << c;
        }
        out << "\n";
        for (const auto& s : tables.snapshots) {
            for (const auto* kind : {"truth", "reco"}) {
                const Eigen::VectorXd& v = std::string_view(kind) == "truth" ? s.truth : s.reco;
                out << s.sample << ',' << to_string(s.param) << ',' << s.variant << ',' << s.p << ',' << s.tau << ','
                    << s.member << ',' << kind;
                for (Eigen::Index c = 0; c < v.size(); ++c) {
                    out << ',' << v(c);
                }
                out << "\n";
            }
        }
    }
    {
        auto out = open_output(dir / "manifest.json");
        out << config_to_json(config) << "\n";
    }
    if (!tables.failures.empty() || !tables.aborted.empty()) {
        nlohmann::json list = nlohmann::json::array();
        for (const auto& f : tables.failures) {
            list.push_back({{"sample", f.sample}, {"p", f.p}, {"tau", f.tau}, {"study", f.study},
                            {"member", f.member}, {"error", f.what}});
        }
        const nlohmann::json j = {{"aborted", tables.aborted}, {"failures", list}};
        auto out = open_output(dir / "failures.json");
        out << j.dump(2) << "\n";
    }
}

} // namespace plap
