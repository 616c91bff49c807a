#include "maclab/baselines.hpp"
#include "maclab/commands.hpp"
#include "maclab/core.hpp"
#include "maclab/dae.hpp"
#include "maclab/error.hpp"
#include "maclab/io.hpp"
#include "maclab/metrics.hpp"

#include <pybind11/complex.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <thread>

namespace py = pybind11;
using namespace maclab;

namespace {

using ComplexArray = py::array_t<std::complex<double>>;

ComplexArray to_array(std::span<const ComplexPoint> pts)
{
    ComplexArray out(static_cast<py::ssize_t>(pts.size()));
    std::copy(pts.begin(), pts.end(), out.mutable_data());
    return out;
}

std::vector<ComplexPoint> from_array(const py::array_t<std::complex<double>, py::array::c_style | py::array::forcecast>& a)
{
    if (a.ndim() != 1)
        throw Error(ErrorCode::ShapeMismatch, "expected a 1-D array of complex points");
    return {a.data(), a.data() + a.size()};
}

EvalOptions options(unsigned workers)
{
    return {workers == 0 ? std::max(1u, std::thread::hardware_concurrency()) : workers};
}

RotationObjective parse_objective(const std::string& name)
{
    if (name == "rate")
        return RotationObjective::SumRate;
    if (name == "md")
        return RotationObjective::MinDistance;
    throw Error(ErrorCode::InvalidArgument, "objective must be 'rate' or 'md'");
}

py::dict ser_dict(const SerReport& r)
{
    py::dict d;
    d["snr_db"] = r.snr_db;
    d["trials"] = r.trials;
    d["joint_ser"] = r.joint_ser;
    d["avg_ser"] = r.avg_ser;
    d["per_user_ser"] = r.per_user_ser;
    d["per_user_ber"] = r.per_user_ber;
    return d;
}

}  // namespace

PYBIND11_MODULE(_maclab, m)
{
    m.doc() = "Constellation design and evaluation for Gaussian multiple access channels";
    m.attr("__version__") = std::string(kToolVersion);

    static py::exception<Error> error_type(m, "MaclabError", PyExc_ValueError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p)
                std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object exc = py::reinterpret_borrow<py::object>(error_type.ptr())(e.what());
            exc.attr("code") = std::string(to_string(e.code()));
            exc.attr("exit_code") = exit_code_for(e);
            PyErr_SetObject(error_type.ptr(), exc.ptr());
        }
    });

    py::enum_<PowerRegime>(m, "PowerRegime")
        .value("Unnormalized", PowerRegime::Unnormalized)
        .value("Unit", PowerRegime::Unit)
        .value("SubUnit", PowerRegime::SubUnit);

    py::class_<Scenario>(m, "Scenario")
        .def(py::init([](std::vector<int> bits, std::vector<double> alpha) {
                 Scenario s{std::move(bits), std::move(alpha)};
                 validate_scenario(s);
                 return s;
             }),
             py::arg("bits"), py::arg("alpha"))
        .def_static("two_user", &Scenario::two_user, py::arg("alpha"), py::arg("k1") = 2, py::arg("k2") = 2)
        .def_readonly("bits", &Scenario::bits)
        .def_readonly("alpha", &Scenario::alpha)
        .def_property_readonly("users", &Scenario::users)
        .def_property_readonly("joint_size", &Scenario::joint_size)
        .def("__eq__", [](const Scenario& a, const Scenario& b) { return a == b; })
        .def("__repr__", [](const Scenario& s) {
            return "Scenario(bits=" + py::repr(py::cast(s.bits)).cast<std::string>() +
                   ", alpha=" + py::repr(py::cast(s.alpha)).cast<std::string>() + ")";
        });

    py::class_<Constellation>(m, "Constellation")
        .def(py::init([](int bits, const py::array_t<std::complex<double>, py::array::c_style | py::array::forcecast>& pts,
                         PowerRegime regime) { return Constellation(bits, from_array(pts), regime); }),
             py::arg("bits"), py::arg("points"), py::arg("regime") = PowerRegime::Unnormalized)
        .def_property_readonly("bits", &Constellation::bits)
        .def_property_readonly("points", [](const Constellation& c) { return to_array(c.points()); })
        .def_property_readonly("regime", &Constellation::regime)
        .def("mean_power", &Constellation::mean_power)
        .def("__len__", &Constellation::size)
        .def("__eq__", [](const Constellation& a, const Constellation& b) { return a == b; });

    m.def(
        "superimpose",
        [](const Scenario& s, const std::vector<Constellation>& users) { return to_array(superimpose(s, users).points); },
        py::arg("scenario"), py::arg("users"), "Sum constellation indexed by joint label.");
    m.def(
        "min_distance",
        [](const py::array_t<std::complex<double>, py::array::c_style | py::array::forcecast>& pts) {
            return min_distance(from_array(pts));
        },
        py::arg("points"));
    m.def(
        "normalize",
        [](const py::array_t<std::complex<double>, py::array::c_style | py::array::forcecast>& pts) {
            return to_array(normalize(from_array(pts)).points());
        },
        py::arg("points"), "Zero mean, unit mean power.");

    m.def("qpsk", &qpsk);
    m.def("bpsk", &bpsk);
    m.def("pam", &pam, py::arg("k"));
    m.def("pam_orthogonal", &pam_orthogonal, py::arg("k1") = 2, py::arg("k2") = 2);
    m.def(
        "rotation_optimize",
        [](const Scenario& s, const std::string& objective, double grid_deg, std::optional<double> snr_db) {
            const Constellation base2 = s.bits.size() == 2 && s.bits[1] == 1 ? bpsk() : qpsk();
            const RotationResult r =
                rotation_optimize(qpsk(), base2, s, parse_objective(objective), grid_deg * std::numbers::pi / 180, snr_db);
            py::dict d;
            d["theta_deg"] = r.theta_star * 180 / std::numbers::pi;
            d["objective_value"] = r.objective_value;
            d["users"] = r.users;
            return d;
        },
        py::arg("scenario"), py::arg("objective") = "md", py::arg("grid_deg") = 0.1, py::arg("snr_db") = py::none(),
        "Rotate user 2's QPSK (BPSK when k2 = 1) against user 1's QPSK.");
    m.def(
        "parallelogram_md",
        [](const Scenario& s) {
            const ParallelogramResult r = parallelogram_md(s);
            py::dict d;
            d["users"] = r.users;
            d["min_distance"] = r.min_distance;
            d["evaluations"] = r.evaluations;
            return d;
        },
        py::arg("scenario"));

    m.def(
        "sum_rate",
        [](const Scenario& s, const std::vector<Constellation>& users, double snr_db, const std::string& method,
           int quad_order, std::uint64_t samples, std::uint64_t seed, unsigned workers) {
            const SumConstellation sum = superimpose(s, users);
            const NoiseSpec spec = NoiseSpec::from_snr_db(snr_db);
            py::gil_scoped_release release;
            RatePoint r;
            if (method == "quadrature")
                r = cc_sum_rate_gh(sum, spec, quad_order, options(workers));
            else if (method == "mc")
                r = cc_sum_rate_mc(sum, spec, samples, RngSeed{seed, 0}, options(workers));
            else
                throw Error(ErrorCode::InvalidArgument, "method must be 'quadrature' or 'mc'");
            return std::pair{r.rate_bits, r.std_error};
        },
        py::arg("scenario"), py::arg("users"), py::arg("snr_db"), py::arg("method") = "quadrature",
        py::arg("quad_order") = 16, py::arg("samples") = 10000, py::arg("seed") = 1, py::arg("workers") = 1,
        "Constellation-constrained sum rate in bits: (rate, standard_error).");
    m.def(
        "ser",
        [](const Scenario& s, const std::vector<Constellation>& users, double snr_db, std::uint64_t trials,
           std::uint64_t seed, unsigned workers) {
            SerReport r;
            {
                py::gil_scoped_release release;
                r = ser_ml(s, users, NoiseSpec::from_snr_db(snr_db), trials, RngSeed{seed, 0}, options(workers));
            }
            return ser_dict(r);
        },
        py::arg("scenario"), py::arg("users"), py::arg("snr_db"), py::arg("trials"), py::arg("seed") = 1,
        py::arg("workers") = 1, "Monte Carlo joint ML symbol error rates.");
    m.def("ml_detect", [](ComplexPoint y, const Scenario& s, const std::vector<Constellation>& users) {
        return ml_detect(y, superimpose(s, users));
    });

    py::class_<DaeConfig>(m, "DaeConfig")
        .def(py::init([](const Scenario& s) {
                 DaeConfig c;
                 c.scenario = s;
                 return c;
             }),
             py::arg("scenario"))
        .def_readwrite("scenario", &DaeConfig::scenario)
        .def_readwrite("train_snr_db", &DaeConfig::train_snr_db)
        .def_readwrite("num_const", &DaeConfig::num_const)
        .def_readwrite("max_epochs", &DaeConfig::max_epochs)
        .def_readwrite("patience", &DaeConfig::patience)
        .def_readwrite("hidden_sizes", &DaeConfig::hidden_sizes)
        .def_property(
            "step_size", [](const DaeConfig& c) { return c.adam.step_size; },
            [](DaeConfig& c, double v) { c.adam.step_size = v; })
        .def_property(
            "seed", [](const DaeConfig& c) { return c.init_seed.seed; },
            [](DaeConfig& c, std::uint64_t v) {
                c.init_seed = RngSeed{v, 0};
                c.noise_seed = RngSeed{v, std::uint64_t{1} << 32};
            },
            "Sets the init stream (seed, 0) and the noise stream (seed, 2^32).");

    py::class_<DaeModel>(m, "DaeModel")
        .def_property_readonly("config", &DaeModel::config)
        .def_property_readonly("loss_history", [](const DaeModel& d) { return d.history().loss; })
        .def_property_readonly("best_epoch", [](const DaeModel& d) { return d.history().best_epoch; })
        .def_property_readonly("stop_reason", [](const DaeModel& d) { return d.history().stop_reason; })
        .def("constellations", &extract_constellations)
        .def("decode", &decode, py::arg("y"), "Bit probabilities for one received point.")
        .def(
            "ser",
            [](const DaeModel& d, double snr_db, std::uint64_t trials, std::uint64_t seed, unsigned workers) {
                SerReport r;
                {
                    py::gil_scoped_release release;
                    r = ser_dae(d, d.config().scenario, NoiseSpec::from_snr_db(snr_db), trials, RngSeed{seed, 0},
                                options(workers));
                }
                return ser_dict(r);
            },
            py::arg("snr_db"), py::arg("trials"), py::arg("seed") = 1, py::arg("workers") = 1)
        .def(
            "save",
            [](const DaeModel& d, const std::filesystem::path& path) {
                Provenance p;
                p.method = "dae";
                write_text_file(path, write_model(d, p));
            },
            py::arg("path"))
        .def_static(
            "load", [](const std::filesystem::path& path) { return read_model(read_text_file(path)); },
            py::arg("path"));

    m.def(
        "train",
        [](const DaeConfig& c) {
            py::gil_scoped_release release;
            return train(c);
        },
        py::arg("config"));
    m.def(
        "train_restarts",
        [](const DaeConfig& c, int restarts, std::vector<double> snr_list, double select_snr_db) {
            py::gil_scoped_release release;
            return train_restarts(c, restarts, snr_list, select_snr_db);
        },
        py::arg("config"), py::arg("restarts"), py::arg("snr_list"), py::arg("select_snr_db"));

    m.def(
        "write_constellation",
        [](const std::filesystem::path& path, const Scenario& s, const std::vector<Constellation>& users,
           const std::string& method) {
            ConstellationFile f{s, users, {}};
            f.provenance.method = method;
            write_text_file(path, write_constellation(f));
        },
        py::arg("path"), py::arg("scenario"), py::arg("users"), py::arg("method") = "external");
    m.def(
        "read_constellation",
        [](const std::filesystem::path& path) {
            const ConstellationFile f = read_constellation(read_text_file(path));
            py::dict prov;
            for (const auto& [k, v] : f.provenance.parameters)
                prov[py::str(k)] = v;
            return py::make_tuple(f.scenario, f.users, f.provenance.method, prov);
        },
        py::arg("path"), "Returns (scenario, users, method, parameters).");
    m.def(
        "read_curve",
        [](const std::filesystem::path& path) {
            const CurveFile c = read_curve(read_text_file(path));
            py::dict meta, cols;
            for (const auto& [k, v] : c.metadata)
                meta[py::str(k)] = v;
            for (std::size_t j = 0; j < c.columns.size(); ++j) {
                py::array_t<double> col(static_cast<py::ssize_t>(c.rows.size()));
                for (std::size_t r = 0; r < c.rows.size(); ++r)
                    col.mutable_at(r) = c.rows[r][j];
                cols[py::str(c.columns[j])] = col;
            }
            return py::make_tuple(meta, cols);
        },
        py::arg("path"), "Returns (metadata, columns).");
    m.def("parse_snr_grid", &parse_snr_grid, py::arg("text"));
}
