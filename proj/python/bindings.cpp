#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "papireg/dataio/frame.hpp"
#include "papireg/dataio/synthetic.hpp"
#include "papireg/dataio/tensor_io.hpp"
#include "papireg/error.hpp"
#include "papireg/matching.hpp"
#include "papireg/metrics.hpp"
#include "papireg/pipeline.hpp"
#include "papireg/pose.hpp"
#include "papireg/projection.hpp"

namespace py = pybind11;
using namespace papireg;

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

projection::PointCloud cloud_from_array(const RowMatrix& points, const std::optional<std::vector<int>>& laser_ids) {
  if (points.cols() != 4 && points.cols() != 3) throw py::value_error("points must be N x 3 or N x 4");
  projection::PointCloud cloud;
  cloud.points.reserve(points.rows());
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    cloud.points.push_back({points(i, 0), points(i, 1), points(i, 2), points.cols() == 4 ? points(i, 3) : 0.0});
  }
  cloud.laser_id = laser_ids;
  return cloud;
}

template <typename T>
py::array_t<T> grid_array(const std::vector<T>& values, int height, int width) {
  py::array_t<T> out({height, width});
  std::copy(values.begin(), values.end(), out.mutable_data());
  return out;
}

py::dict maps_dict(const projection::ProjectionMaps& maps) {
  py::dict d;
  d["range"] = grid_array(maps.range, maps.height, maps.width);
  d["reflectance"] = grid_array(maps.reflectance, maps.height, maps.width);
  d["index"] = grid_array(maps.index, maps.height, maps.width);
  d["occupancy"] = grid_array(maps.occupancy, maps.height, maps.width);
  return d;
}

std::vector<Eigen::Vector3d> rows3(const RowMatrix& m) {
  if (m.cols() != 3) throw py::value_error("expected N x 3 points");
  std::vector<Eigen::Vector3d> out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.emplace_back(m(i, 0), m(i, 1), m(i, 2));
  return out;
}

std::vector<Eigen::Vector2d> rows2(const RowMatrix& m) {
  if (m.cols() != 2) throw py::value_error("expected N x 2 pixels");
  std::vector<Eigen::Vector2d> out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.emplace_back(m(i, 0), m(i, 1));
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "LiDAR-camera registration core";

  // Instances carry the error code name in `.code`.
  static PyObject* error_type = PyErr_NewException("papireg._core.Error", PyExc_RuntimeError, nullptr);
  m.attr("Error") = py::handle(error_type);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object err = py::handle(error_type)(e.what());
      err.attr("code") = std::string(to_string(e.code()));
      PyErr_SetObject(error_type, err.ptr());
    }
  });

  py::class_<geom::Pose>(m, "Pose")
      .def(py::init<>())
      .def(py::init(&geom::Pose::from_rt), py::arg("rotation"), py::arg("translation"))
      .def_readwrite("rotation", &geom::Pose::rotation)
      .def_readwrite("translation", &geom::Pose::translation)
      .def("matrix", &geom::Pose::matrix)
      .def("inverse", [](const geom::Pose& p) { return geom::inverse(p); })
      .def("__matmul__", [](const geom::Pose& a, const geom::Pose& b) { return geom::compose(a, b); })
      .def("__repr__", [](const geom::Pose& p) { return "Pose(" + geom::format_pose(p) + ")"; });

  py::class_<geom::Intrinsics>(m, "Intrinsics")
      .def(py::init([](double fx, double fy, double cx, double cy, int w, int h) {
             geom::Intrinsics k{fx, fy, cx, cy, w, h};
             k.validate();
             return k;
           }),
           py::arg("fx"), py::arg("fy"), py::arg("cx"), py::arg("cy"), py::arg("width"), py::arg("height"))
      .def_readonly("fx", &geom::Intrinsics::fx)
      .def_readonly("fy", &geom::Intrinsics::fy)
      .def_readonly("cx", &geom::Intrinsics::cx)
      .def_readonly("cy", &geom::Intrinsics::cy)
      .def_readonly("width", &geom::Intrinsics::width)
      .def_readonly("height", &geom::Intrinsics::height)
      .def("matrix", &geom::Intrinsics::matrix);

  m.def("rot_z", &geom::rot_z, py::arg("radians"));

  m.def(
      "project",
      [](const RowMatrix& points, std::optional<std::vector<int>> laser_ids, int width, int height,
         double azimuth_origin) {
        projection::ProjectionConfig cfg;
        cfg.width = width;
        cfg.height = height;
        cfg.azimuth_origin = azimuth_origin;
        return maps_dict(projection::project_to_maps(cloud_from_array(points, laser_ids), cfg));
      },
      py::arg("points"), py::arg("laser_ids") = py::none(), py::arg("width") = 1024, py::arg("height") = 64,
      py::arg("azimuth_origin") = -std::numbers::pi,
      "LaserID projection of an N x 4 (x, y, z, reflectance) array into H x W maps.");

  m.def(
      "dual_softmax", [](const Eigen::MatrixXd& scores) { return matching::soft_assignment(scores).values; },
      py::arg("scores"));

  m.def(
      "topk",
      [](const Eigen::MatrixXd& p, int k) {
        matching::AssignmentMatrix a;
        a.values = p;
        a.camera_grid = {1, static_cast<int>(p.rows())};
        a.lidar_grid = {1, static_cast<int>(p.cols())};
        std::vector<std::tuple<int, int, double>> out;
        for (const auto& t : matching::topk_patch_matches(a, k)) out.emplace_back(t.camera_patch.u, t.lidar_patch.u, t.score);
        return out;
      },
      py::arg("assignment"), py::arg("k"), "Top-k (row, column, value) entries.");

  m.def(
      "epnp",
      [](const RowMatrix& points, const RowMatrix& pixels, const geom::Intrinsics& k) {
        const auto p3 = rows3(points);
        const auto p2 = rows2(pixels);
        return pose::epnp(p3, p2, k);
      },
      py::arg("points"), py::arg("pixels"), py::arg("intrinsics"));

  py::class_<pose::PoseEstimate>(m, "PoseEstimate")
      .def_readonly("pose", &pose::PoseEstimate::pose)
      .def_readonly("inlier_mask", &pose::PoseEstimate::inlier_mask)
      .def_readonly("inlier_count", &pose::PoseEstimate::inlier_count)
      .def_readonly("mean_reprojection_error", &pose::PoseEstimate::mean_reprojection_error)
      .def_readonly("iterations", &pose::PoseEstimate::iterations);

  m.def(
      "ransac_pnp",
      [](const RowMatrix& points, const RowMatrix& pixels, const geom::Intrinsics& k, double threshold,
         int max_iterations, int min_inliers, std::uint64_t seed) {
        pose::RansacParams params;
        params.inlier_threshold = threshold;
        params.max_iterations = max_iterations;
        params.min_inliers = min_inliers;
        params.seed = seed;
        const auto p3 = rows3(points);
        const auto p2 = rows2(pixels);
        return pose::ransac_pnp(p3, p2, k, params);
      },
      py::arg("points"), py::arg("pixels"), py::arg("intrinsics"), py::arg("threshold") = 2.0,
      py::arg("max_iterations") = 1000, py::arg("min_inliers") = 10, py::arg("seed") = 0);

  m.def("rte", &metrics::rte, py::arg("t_gt"), py::arg("t_est"));
  m.def(
      "rre",
      [](const Eigen::Matrix3d& r_gt, const Eigen::Matrix3d& r_e, const std::string& convention) {
        return metrics::rre(r_gt, r_e, metrics::parse_euler_convention(convention));
      },
      py::arg("r_gt"), py::arg("r_est"), py::arg("convention") = "zyx", "Relative rotation error in degrees.");

  m.def(
      "read_tensors",
      [](const std::string& path) {
        py::list out;
        for (const auto& t : dataio::read_tensors(path)) {
          std::vector<py::ssize_t> shape(t.dims.begin(), t.dims.end());
          py::array_t<float> a(shape);
          std::copy(t.data.begin(), t.data.end(), a.mutable_data());
          out.append(a);
        }
        return out;
      },
      py::arg("path"));
  m.def(
      "write_tensors",
      [](const std::string& path, const std::vector<py::array_t<float, py::array::c_style | py::array::forcecast>>& arrays) {
        std::vector<dataio::Tensor> tensors;
        for (const auto& a : arrays) {
          dataio::Tensor t;
          for (py::ssize_t d = 0; d < a.ndim(); ++d) t.dims.push_back(static_cast<std::uint32_t>(a.shape(d)));
          t.data.assign(a.data(), a.data() + a.size());
          tensors.push_back(std::move(t));
        }
        dataio::write_tensors(path, tensors);
      },
      py::arg("path"), py::arg("tensors"));

  py::class_<dataio::SyntheticScene>(m, "SyntheticScene")
      .def_readonly("intrinsics", &dataio::SyntheticScene::intrinsics)
      .def_readonly("gt_extrinsics", &dataio::SyntheticScene::gt_extrinsics)
      .def_readonly("applied_perturbation", &dataio::SyntheticScene::applied_perturbation)
      .def_property_readonly("maps", [](const dataio::SyntheticScene& s) { return maps_dict(s.maps); })
      .def_property_readonly("points",
                             [](const dataio::SyntheticScene& s) {
                               py::array_t<double> a({static_cast<py::ssize_t>(s.cloud.size()), py::ssize_t{4}});
                               auto v = a.mutable_unchecked<2>();
                               for (std::size_t i = 0; i < s.cloud.size(); ++i) {
                                 const auto& p = s.cloud.points[i];
                                 v(i, 0) = p.x;
                                 v(i, 1) = p.y;
                                 v(i, 2) = p.z;
                                 v(i, 3) = p.reflectance;
                               }
                               return a;
                             })
      .def_property_readonly("n_correspondences", [](const dataio::SyntheticScene& s) { return s.correspondences.size(); });

  m.def("generate_synthetic",
        py::overload_cast<std::uint64_t, int, int, int>(&dataio::generate_synthetic), py::arg("seed"),
        py::arg("n_lasers") = 32, py::arg("w_r") = 512, py::arg("n_outlier_features") = 0);

  m.def(
      "register_scene",
      [](const dataio::SyntheticScene& scene, int top_k, std::uint64_t seed) {
        dataio::RunConfig cfg;
        cfg.projection = scene.projection;
        cfg.top_k = top_k;
        cfg.seed = seed;
        const auto frame = dataio::frame_from_synthetic(scene, "scene");
        const auto reg = pipeline::register_frame(frame, cfg, 0);
        const auto r = pipeline::score(frame, reg, cfg);
        py::dict d;
        d["registered"] = r.registered;
        d["pose"] = r.estimate;
        d["rte"] = r.errors.rte;
        d["rre"] = r.errors.rre;
        d["success"] = r.errors.success;
        d["correspondences"] = r.correspondences;
        d["inliers"] = r.inliers;
        return d;
      },
      py::arg("scene"), py::arg("top_k") = 300, py::arg("seed") = 0,
      "Match the scene's features, estimate the pose and score it against ground truth.");
}
