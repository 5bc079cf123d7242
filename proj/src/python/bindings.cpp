#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "uavslice/baselines.hpp"
#include "uavslice/channel.hpp"
#include "uavslice/config.hpp"
#include "uavslice/environment.hpp"
#include "uavslice/experiment.hpp"

namespace py = pybind11;
using namespace uavslice;

namespace {

py::array_t<double> to_matrix(const std::vector<Observation>& rows) {
    py::array_t<double> out({static_cast<py::ssize_t>(rows.size()), static_cast<py::ssize_t>(kObsWidth)});
    auto view = out.mutable_unchecked<2>();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (int j = 0; j < kObsWidth; ++j) view(i, j) = rows[i][j];
    }
    return out;
}

std::vector<AgentAction> to_actions(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2 || a.shape(1) != kActionWidth) {
        throw py::value_error("actions must have shape (n_uavs, " + std::to_string(kActionWidth) + ")");
    }
    auto view = a.unchecked<2>();
    std::vector<AgentAction> out(static_cast<std::size_t>(a.shape(0)));
    for (py::ssize_t i = 0; i < a.shape(0); ++i) {
        for (int j = 0; j < kActionWidth; ++j) out[i][j] = view(i, j);
    }
    return out;
}

py::dict reward_dict(const RewardBreakdown& r) {
    py::dict d;
    d["qos"] = r.qos;
    d["energy"] = r.energy;
    d["fairness"] = r.fairness;
    d["total"] = r.total;
    return d;
}

py::dict info_dict(const StepInfo& info) {
    py::dict d;
    d["reward"] = reward_dict(info.reward);
    d["slice_satisfaction"] = info.slice_satisfaction;
    d["mean_energy_j"] = info.mean_energy_j;
    d["jain_throughput"] = info.jain_throughput;
    d["handovers"] = info.handovers;
    d["ue_count"] = info.ue_count;
    return d;
}

/// Python-facing configuration: dotted keys in, dotted keys out.
ExperimentConfig config_from(const py::dict& overrides, const std::string& path) {
    ExperimentConfig c = path.empty() ? ExperimentConfig{} : parse_config_file(path).config;
    for (const auto& [key, value] : overrides) {
        set_value(c, py::str(key), py::str(value));
    }
    validate(c);
    return c;
}

}  // namespace

PYBIND11_MODULE(_uavslice, m) {
    m.doc() = "UAV network-slicing simulator, heuristic baselines and multi-agent learner";
    m.attr("OBS_WIDTH") = kObsWidth;
    m.attr("ACTION_WIDTH") = kActionWidth;
    m.attr("NUM_DEMAND_AREAS") = kNumDemandAreas;

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<ActionError>(m, "ActionError", PyExc_ValueError);
    py::register_exception<channel::DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<experiment::ArtifactError>(m, "ArtifactError", PyExc_RuntimeError);

    py::class_<ExperimentConfig>(m, "Config")
        .def(py::init([](const py::dict& overrides, const std::string& path) { return config_from(overrides, path); }),
             py::arg("overrides") = py::dict(), py::arg("path") = "")
        .def_static("parse", [](const std::string& text) { return parse_config_text(text).config; })
        .def("get", [](const ExperimentConfig& c, const std::string& key) { return get_value(c, key); })
        .def("set",
             [](ExperimentConfig& c, const std::string& key, const std::string& value) {
                 set_value(c, key, value);
                 validate(c);
             })
        .def_static("keys", &config_keys)
        .def("serialize", [](const ExperimentConfig& c) { return serialize(c); })
        .def("hash", [](const ExperimentConfig& c) { return experiment::hash_hex(config_hash(c)); });

    auto ch = m.def_submodule("channel", "Air-to-ground link model");
    ch.def("los_probability", &channel::los_probability, py::arg("elevation_deg"), py::arg("a") = 4.88,
           py::arg("b") = 0.43);
    ch.def(
        "path_loss_db",
        [](double distance_m, double elevation_deg) {
            const channel::ChannelParams p{};
            return channel::path_loss_db({distance_m, elevation_deg, p.wavelength()}, p);
        },
        py::arg("distance_m"), py::arg("elevation_deg"));
    ch.def("throughput_bps", &channel::throughput_bps, py::arg("bw_hz"), py::arg("sinr"));
    ch.def("drop_probability", &channel::drop_probability, py::arg("utilization"), py::arg("buffer_packets"));

    m.def("fairness_index", [](const std::vector<double>& x) { return fairness_index(x); }, py::arg("x"));

    py::class_<Environment>(m, "Environment")
        .def(py::init<ExperimentConfig>(), py::arg("config") = ExperimentConfig{})
        .def("reset", [](Environment& e, std::uint64_t seed) { return to_matrix(e.reset(seed)); }, py::arg("seed"))
        .def("step",
             [](Environment& e, const py::array_t<double, py::array::c_style | py::array::forcecast>& actions) {
                 const auto result = e.step(to_actions(actions));
                 return py::make_tuple(to_matrix(result.observations), result.reward.total, info_dict(result.info));
             })
        .def("observations", [](const Environment& e) { return to_matrix(e.observations()); })
        .def("global_state",
             [](const Environment& e) {
                 const auto s = build_global_state(e.world(), e.config());
                 return py::array_t<double>(static_cast<py::ssize_t>(s.size()), s.data());
             })
        .def("constraint_violations",
             [](const Environment& e) {
                 std::vector<std::string> out;
                 for (const auto& v : check_constraints(e.world(), e.config())) {
                     out.push_back("uav " + std::to_string(v.uav_id) + ": " + v.what);
                 }
                 return out;
             })
        .def("uav_positions",
             [](const Environment& e) {
                 std::vector<std::array<double, 3>> out;
                 for (const auto& u : e.world().uavs) out.push_back({u.position.x, u.position.y, u.position.z});
                 return out;
             })
        .def("uav_resource_blocks",
             [](const Environment& e) {
                 std::vector<std::array<int, kNumDemandAreas>> out;
                 for (const auto& u : e.world().uavs) out.push_back(u.da_rbs);
                 return out;
             })
        .def_property_readonly("n_uavs", &Environment::n_uavs)
        .def_property_readonly("n_ues", [](const Environment& e) { return e.world().ues.size(); });

    m.def(
        "baseline_actions",
        [](const Environment& env, const std::string& kind, std::uint64_t seed) {
            const auto k = baselines::parse_kind(kind);
            if (!k) throw py::value_error("unknown baseline '" + kind + "'");
            const baselines::BaselinePolicy policy(*k);
            std::mt19937_64 rng(seed);
            py::array_t<double> out({static_cast<py::ssize_t>(env.n_uavs()), static_cast<py::ssize_t>(kActionWidth)});
            auto view = out.mutable_unchecked<2>();
            for (int u = 0; u < env.n_uavs(); ++u) {
                const AgentAction a = policy.act(env.world(), env.config(), u, rng);
                for (int j = 0; j < kActionWidth; ++j) view(u, j) = a[j];
            }
            return out;
        },
        py::arg("env"), py::arg("kind"), py::arg("seed") = 0);

    m.def(
        "train",
        [](const ExperimentConfig& c, std::optional<std::filesystem::path> resume_from) {
            py::gil_scoped_release release;
            experiment::run_train(c, experiment::TrainOptions{resume_from});
        },
        py::arg("config"), py::arg("resume_from") = std::nullopt);
    m.def(
        "evaluate",
        [](const ExperimentConfig& c, std::optional<std::filesystem::path> checkpoint, bool untrained, bool force) {
            py::gil_scoped_release release;
            const auto eps = experiment::run_eval(c, {checkpoint, untrained, force});
            return average(eps).mean_reward.total;
        },
        py::arg("config"), py::arg("checkpoint") = std::nullopt, py::arg("untrained") = false,
        py::arg("force") = false, "Writes eval.csv under run.out_dir and returns the mean reward");
    m.def(
        "baseline",
        [](const ExperimentConfig& c, const std::string& kind) {
            const auto k = baselines::parse_kind(kind);
            if (!k) throw py::value_error("unknown baseline '" + kind + "'");
            py::gil_scoped_release release;
            return average(experiment::run_baseline(c, *k)).mean_reward.total;
        },
        py::arg("config"), py::arg("kind"), "Writes eval.csv under run.out_dir and returns the mean reward");
    m.def("export_figures", &experiment::export_figure_data, py::arg("inputs"), py::arg("out_dir"),
          py::arg("window") = 50);
}
