// pydina: python access to the simulation, fitting, and bootstrap entry
// points. Arrays cross the boundary as numpy via pybind11/Eigen.
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dina/experiments.hpp"

namespace py = pybind11;
using namespace dina;

namespace {

Dataset make_dataset(const Eigen::MatrixXd& X, const Eigen::VectorXi& w,
                     const Eigen::VectorXd& y, const std::string& family,
                     const std::optional<Eigen::VectorXd>& delta) {
  Dataset data;
  data.family = family_by_name(family);
  data.X = X;
  data.w = w;
  data.y = y;
  if (delta) data.delta = *delta;
  int max_arm = 0;
  for (Eigen::Index i = 0; i < w.size(); ++i) max_arm = std::max(max_arm, w[i]);
  data.n_arms = std::max(2, max_arm + 1);
  data.validate();
  return data;
}

DinaOptions make_options(const std::string& learner, std::uint64_t seed) {
  DinaOptions opts;
  opts.seed = seed;
  if (learner == "boost") {
    opts.propensity = LearnerSpec::boost();
    opts.outcome = LearnerSpec::boost();
  } else if (learner != "glm") {
    throw std::invalid_argument("learner must be 'glm' or 'boost'");
  }
  return opts;
}

}  // namespace

PYBIND11_MODULE(pydina, m) {
  m.doc() = "two-stage natural-parameter treatment-effect estimation";

  m.def(
      "simulate",
      [](const std::string& family, Eigen::Index n, std::uint64_t seed, bool confounded,
         bool heterogeneous) {
        const Family fam = family_by_name(family);
        SimConfig config = default_design(fam.kind(), n, seed, confounded, heterogeneous);
        if (fam.is_cox()) {
          config.censoring = UniformOn{1.0};
          config.censoring = calibrate_censoring(config, 0.5);
        }
        const SimData sim = gen_dataset(config);
        py::dict out;
        out["x"] = sim.data.X;
        out["w"] = sim.data.w;
        out["y"] = sim.data.y;
        if (sim.data.delta) out["delta"] = *sim.data.delta;
        out["true_tau"] = sim.truth.true_tau;
        out["beta"] = sim.truth.beta;
        return out;
      },
      py::arg("family"), py::arg("n") = 1024, py::arg("seed") = 1,
      py::arg("confounded") = true, py::arg("heterogeneous") = true,
      "Draw one dataset from the calibrated default design for the family.");

  m.def(
      "fit",
      [](const Eigen::MatrixXd& X, const Eigen::VectorXi& w, const Eigen::VectorXd& y,
         const std::string& family, const std::string& method, const std::string& learner,
         std::uint64_t seed, const std::optional<Eigen::VectorXd>& delta) {
        const Dataset data = make_dataset(X, w, y, family, delta);
        return fit_method(method, data, make_options(learner, seed)).beta;
      },
      py::arg("x"), py::arg("w"), py::arg("y"), py::arg("family") = "gaussian",
      py::arg("method") = "dina", py::arg("learner") = "glm", py::arg("seed") = 1,
      py::arg("delta") = py::none(),
      "Effect coefficients [intercept, slopes]; methods: dina, e, se, x, pax.");

  m.def(
      "bootstrap",
      [](const Eigen::MatrixXd& X, const Eigen::VectorXi& w, const Eigen::VectorXd& y,
         const std::string& family, const std::string& method, const std::string& learner,
         int B, double level, std::uint64_t seed, const std::optional<Eigen::VectorXd>& delta) {
        const Dataset data = make_dataset(X, w, y, family, delta);
        const DinaOptions opts = make_options(learner, seed);
        const Estimator est = [&](const Dataset& d) { return fit_method(method, d, opts).beta; };
        const Eigen::VectorXd beta = est(data);
        const BootstrapResult r = bootstrap_ci(data, est, beta, B, level, seed);
        py::dict out;
        out["beta"] = beta;
        out["se"] = r.se;
        out["ci_lo"] = r.ci_lo;
        out["ci_hi"] = r.ci_hi;
        return out;
      },
      py::arg("x"), py::arg("w"), py::arg("y"), py::arg("family") = "gaussian",
      py::arg("method") = "dina", py::arg("learner") = "glm", py::arg("B") = 100,
      py::arg("level") = 0.95, py::arg("seed") = 1, py::arg("delta") = py::none(),
      "Resampled standard errors and normal-approximation intervals.");

  m.def(
      "blend_weight",
      [](const std::string& family, double e, double eta0, double eta1) {
        const Family fam = family_by_name(family);
        const auto b = blend_exponential(
            fam, [e](const Eigen::VectorXd&) { return e; },
            [eta0](const Eigen::VectorXd&) { return eta0; },
            [eta1](const Eigen::VectorXd&) { return eta1; });
        return b.a_hat(Eigen::VectorXd::Zero(1));
      },
      py::arg("family"), py::arg("e"), py::arg("eta0"), py::arg("eta1"),
      "Variance-weighted propensity a = e V1 / (e V1 + (1-e) V0).");

  m.def(
      "run_experiment",
      [](const std::string& config_path, const std::optional<std::string>& out_dir,
         const std::optional<std::uint64_t>& seed) {
        RunConfig config = parse_run_config(config_path);
        if (out_dir) config.out_dir = *out_dir;
        if (seed) config.seed = *seed;
        run_experiment(config);
      },
      py::arg("config"), py::arg("out") = py::none(), py::arg("seed") = py::none(),
      "Run an experiment config and write its CSV artifacts.");
}
