#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <json.hpp>

#include "lineamorph/cohortstats.hpp"
#include "lineamorph/interslice.hpp"
#include "lineamorph/mesh.hpp"
#include "lineamorph/morphometry.hpp"
#include "lineamorph/phantom.hpp"
#include "lineamorph/pipeline.hpp"
#include "lineamorph/volume.hpp"

namespace py = pybind11;
using namespace lineamorph;

namespace {

py::array_t<std::uint8_t> mask_array(const VoxelMask& m) {
    const Dims d = m.dims();
    py::array_t<std::uint8_t> a({d.nz, d.ny, d.nx});
    std::copy(m.data().begin(), m.data().end(), a.mutable_data());
    return a;
}

VoxelMask mask_from_array(py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast> a,
                          std::array<double, 3> spacing, std::array<double, 3> origin) {
    if (a.ndim() != 3) throw std::invalid_argument("mask array must be 3-D (z, y, x)");
    const Dims d{static_cast<int>(a.shape(2)), static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0))};
    std::vector<std::uint8_t> data(a.data(), a.data() + a.size());
    return VoxelMask(d, {spacing[0], spacing[1], spacing[2]}, {origin[0], origin[1], origin[2]}, std::move(data));
}

py::dict test_dict(const TestResult& r) {
    py::dict d;
    d["method"] = std::string(to_string(r.method));
    d["statistic_name"] = r.statistic_name;
    d["statistic"] = r.statistic;
    d["p_value"] = r.p_value;
    d["significant"] = r.significant;
    d["exact"] = r.exact;
    d["df"] = r.df;
    d["p_asymptotic"] = r.p_asymptotic ? py::cast(*r.p_asymptotic) : py::none();
    return d;
}

py::tuple vec3(const Vec3& v) { return py::make_tuple(v.x, v.y, v.z); }

py::dict landmarks_dict(const LandmarkSet& l) {
    py::dict d;
    d["xiphoid"] = vec3(l.xiphoid);
    d["umbilicus"] = vec3(l.umbilicus);
    d["pubis"] = vec3(l.pubis);
    return d;
}

}  // namespace

PYBIND11_MODULE(_lineamorph, m) {
    m.doc() = "Linea alba morphometry engine";

    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            const std::string msg = std::string(to_string(e.code())) + (e.op().empty() ? "" : " in " + e.op()) +
                                    ": " + e.what();
            PyErr_SetString(PyExc_ValueError, msg.c_str());
        }
    });

    py::class_<LandmarkSet>(m, "LandmarkSet")
        .def(py::init([](std::array<double, 3> x, std::array<double, 3> u, std::array<double, 3> p) {
                 return LandmarkSet{{x[0], x[1], x[2]}, {u[0], u[1], u[2]}, {p[0], p[1], p[2]}};
             }),
             py::arg("xiphoid"), py::arg("umbilicus"), py::arg("pubis"))
        .def_property_readonly("xiphoid", [](const LandmarkSet& l) { return vec3(l.xiphoid); })
        .def_property_readonly("umbilicus", [](const LandmarkSet& l) { return vec3(l.umbilicus); })
        .def_property_readonly("pubis", [](const LandmarkSet& l) { return vec3(l.pubis); });

    py::class_<VoxelMask>(m, "VoxelMask")
        .def(py::init(&mask_from_array), py::arg("array"), py::arg("spacing"),
             py::arg("origin") = std::array<double, 3>{0.0, 0.0, 0.0})
        .def_property_readonly("dims", [](const VoxelMask& v) { return py::make_tuple(v.dims().nx, v.dims().ny, v.dims().nz); })
        .def_property_readonly("spacing", [](const VoxelMask& v) { return vec3(v.spacing()); })
        .def_property_readonly("origin", [](const VoxelMask& v) { return vec3(v.origin()); })
        .def("occupied_count", &VoxelMask::occupied_count)
        .def("to_numpy", &mask_array, "Occupancy as a (z, y, x) uint8 array");

    m.def("load_mask", &load_mask, py::arg("path"));
    m.def("save_mask", &save_mask, py::arg("mask"), py::arg("path"));
    m.def("load_landmarks", &load_landmarks, py::arg("path"));
    m.def("save_landmarks", &save_landmarks, py::arg("landmarks"), py::arg("path"));
    m.def(
        "validate_mask",
        [](const VoxelMask& mask, const LandmarkSet& lm) {
            const ValidationReport r = validate_mask(mask, lm);
            py::list issues;
            for (const auto& i : r.issues) issues.append(py::make_tuple(i.code, i.message));
            py::dict d;
            d["ok"] = r.ok;
            d["issues"] = issues;
            d["occupied_voxel_count"] = r.occupied_voxel_count;
            d["connected_component_count"] = r.connected_component_count;
            return d;
        },
        py::arg("mask"), py::arg("landmarks"));

    m.def(
        "generate_phantom",
        [](const std::string& spec_json) {
            const Phantom p = generate_phantom(parse_phantom_spec(spec_json));
            return py::make_tuple(p.mask, p.landmarks, py::module_::import("json").attr("loads")(ground_truth_json(p.truth)));
        },
        py::arg("spec_json"), "Returns (mask, landmarks, ground_truth dict) for a JSON phantom spec");

    m.def(
        "measure",
        [](const VoxelMask& mask, const LandmarkSet& lm, const std::string& offset_mode) {
            const OffsetMode mode = offset_mode == "axial" ? OffsetMode::Axial : OffsetMode::Arc;
            const SubjectMeasurement s = measure_subject(mask, lm, {mode});
            return py::module_::import("json").attr("loads")(metrics_json(s, mode));
        },
        py::arg("mask"), py::arg("landmarks"), py::arg("offset_mode") = "arc",
        "Full measurement chain; returns the metrics document as a dict");

    m.def(
        "interpolate",
        [](const VoxelMask& dense_or_sparse, std::vector<int> delineated_z, bool closing) {
            return interpolate_stack(SparseDelineation{dense_or_sparse, std::move(delineated_z)}, {closing});
        },
        py::arg("mask"), py::arg("delineated_z"), py::arg("closing") = false);
    m.def("subsample", [](const VoxelMask& dense, std::vector<int> z) { return subsample(dense, std::move(z)).base; },
          py::arg("mask"), py::arg("delineated_z"));
    m.def("uniform_slice_selection", &uniform_slice_selection, py::arg("mask"), py::arg("step"));
    m.def("dice", &dice, py::arg("a"), py::arg("b"));

    m.def(
        "render_mesh",
        [](const VoxelMask& mask) {
            const Mesh mesh = render_mesh(mask);
            py::array_t<double> v({static_cast<py::ssize_t>(mesh.vertices.size()), py::ssize_t{3}});
            auto vm = v.mutable_unchecked<2>();
            for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
                vm(i, 0) = mesh.vertices[i].x;
                vm(i, 1) = mesh.vertices[i].y;
                vm(i, 2) = mesh.vertices[i].z;
            }
            py::array_t<int> f({static_cast<py::ssize_t>(mesh.triangles.size()), py::ssize_t{3}});
            auto fm = f.mutable_unchecked<2>();
            for (std::size_t i = 0; i < mesh.triangles.size(); ++i)
                for (int c = 0; c < 3; ++c) fm(i, c) = mesh.triangles[i][static_cast<std::size_t>(c)];
            return py::make_tuple(v, f);
        },
        py::arg("mask"), "Smoothed isosurface as (vertices, triangles)");

    m.def("summarize", [](std::vector<double> x) {
        const Summary s = summarize(x);
        py::dict d;
        d["n"] = s.n;
        d["mean"] = s.mean;
        d["sd"] = s.sd ? py::cast(*s.sd) : py::none();
        d["min"] = s.min;
        d["max"] = s.max;
        return d;
    });
    m.def("shapiro_wilk", [](std::vector<double> x) { return test_dict(shapiro_wilk(x)); });
    m.def("t_test", [](std::vector<double> a, std::vector<double> b) { return test_dict(t_test(a, b)); });
    m.def("mann_whitney", [](std::vector<double> a, std::vector<double> b) { return test_dict(mann_whitney(a, b)); });
    m.def("anova", [](std::vector<std::vector<double>> g) { return test_dict(anova(g)); });
    m.def("kruskal_wallis", [](std::vector<std::vector<double>> g) { return test_dict(kruskal_wallis(g)); });
    m.def(
        "pearson_matrix",
        [](std::vector<std::string> names, std::vector<std::vector<std::optional<double>>> rows) {
            const CorrelationMatrix c = pearson_matrix(names, rows);
            py::dict d;
            d["names"] = c.names;
            d["r"] = c.r;
            d["n"] = c.n;
            d["defined"] = c.defined;
            return d;
        },
        py::arg("names"), py::arg("rows"));

    m.def(
        "landmarks_dict", &landmarks_dict, py::arg("landmarks"));
}
