#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "xrcn/data.hpp"
#include "xrcn/error.hpp"
#include "xrcn/image.hpp"
#include "xrcn/model_io.hpp"
#include "xrcn/plot.hpp"
#include "xrcn/train.hpp"

namespace py = pybind11;
using namespace xrcn;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const FloatArray& a) {
  std::vector<std::size_t> dims(a.shape(), a.shape() + a.ndim());
  const float* p = a.data();
  return Tensor(Shape(std::move(dims)), std::vector<float>(p, p + a.size()));
}

py::array_t<float> to_array(const Tensor& t) {
  const auto& d = t.shape().dims();
  py::array_t<float> out(std::vector<py::ssize_t>(d.begin(), d.end()));
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

py::dict metrics_dict(const EpochMetrics& m) {
  py::dict d;
  d["epoch"] = m.epoch;
  d["train_loss"] = m.train_loss;
  d["train_acc"] = m.train_accuracy;
  d["val_loss"] = m.val_loss;
  d["val_acc"] = m.val_accuracy;
  return d;
}

EpochMetrics metrics_from_dict(const py::dict& d) {
  return {d["epoch"].cast<std::size_t>(), d["train_loss"].cast<double>(), d["train_acc"].cast<double>(),
          d["val_loss"].cast<double>(), d["val_acc"].cast<double>()};
}

py::array_t<float> dataset_images(const Dataset& ds) {
  py::array_t<float> out({static_cast<py::ssize_t>(ds.size()), py::ssize_t{64}, py::ssize_t{64}, py::ssize_t{1}});
  float* dst = out.mutable_data();
  for (const auto& r : ds.records) dst = std::copy(r.pixels.data().begin(), r.pixels.data().end(), dst);
  return out;
}

}  // namespace

PYBIND11_MODULE(_xrcn, m) {
  m.doc() = "Small CNN for binary chest X-ray classification";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
  py::register_exception<NonFiniteError>(m, "NonFiniteError", base.ptr());
  py::register_exception<InvalidArgument>(m, "InvalidArgument", base.ptr());
  py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<ModelFormatError>(m, "ModelFormatError", base.ptr());

  m.attr("CLASS_NAMES") = py::make_tuple(kClassNames[0], kClassNames[1]);
  m.attr("IMAGE_SIZE") = kImageSize;

  m.def("reference_arch", [] { return reference_arch().to_text(); }, "Canonical text of the reference architecture.");
  m.def(
      "param_count", [](const std::string& arch) { return param_count(ArchSpec::parse(arch)); },
      py::arg("arch") = reference_arch().to_text());

  m.def(
      "conv2d_forward",
      [](const FloatArray& input, const FloatArray& kernels, const FloatArray& bias) {
        return to_array(conv2d_forward(to_tensor(input), to_tensor(kernels), to_tensor(bias)));
      },
      py::arg("input"), py::arg("kernels"), py::arg("bias"), "Valid, stride-1 convolution of an [H,W,Cin] array.");
  m.def(
      "maxpool2", [](const FloatArray& input) { return to_array(maxpool2_forward(to_tensor(input)).output); },
      py::arg("input"));

  m.def(
      "decode_and_resize",
      [](const py::bytes& data) {
        const std::string s = data;
        return to_array(decode_and_resize(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size())));
      },
      py::arg("data"), "PNG/JPEG bytes to a [64,64,1] array in [0,1].");

  m.def(
      "grad_check",
      [](const std::string& arch, std::uint64_t seed, const FloatArray& input, int label) {
        const ArchSpec a = ArchSpec::parse(arch);
        const GradCheckReport r = grad_check(a, init_params(a, seed), to_tensor(input), label);
        py::dict d;
        d["max_rel_error"] = r.max_rel_error;
        d["worst_param"] = r.worst_param;
        d["worst_index"] = r.worst_index;
        d["checked"] = r.checked;
        d["skipped"] = r.skipped;
        return d;
      },
      py::arg("arch"), py::arg("seed"), py::arg("input"), py::arg("label"),
      "Finite-difference check of backward for parameters initialised from `seed`.");

  py::class_<Dataset>(m, "Dataset")
      .def("__len__", &Dataset::size)
      .def_property_readonly("labels", &Dataset::labels)
      .def_property_readonly("images", &dataset_images, "[N,64,64,1] float32 copy")
      .def_property_readonly("paths",
                             [](const Dataset& ds) {
                               std::vector<std::string> p;
                               for (const auto& r : ds.records) p.push_back(r.source_path);
                               return p;
                             })
      .def("count_label", &Dataset::count_label)
      .def(
          "split",
          [](const Dataset& ds, double fraction, std::uint64_t seed) {
            DatasetSplit s = split_stratified(ds, fraction, seed);
            return py::make_tuple(std::move(s.train), std::move(s.test));
          },
          py::arg("train_fraction") = 0.7, py::arg("seed") = 0);

  m.def(
      "load_dataset",
      [](const std::filesystem::path& root) {
        std::vector<std::string> warnings;
        return load_dataset(root, &warnings);
      },
      py::arg("root"));
  m.def("synth_generate", &synth_generate, py::arg("n_per_class"), py::arg("seed"), py::arg("out_dir"));

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("epochs", &TrainConfig::epochs)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("seed", &TrainConfig::seed)
      .def_readwrite("train_fraction", &TrainConfig::train_fraction)
      .def_property(
          "learning_rate", [](const TrainConfig& c) { return c.optimizer.learning_rate; },
          [](TrainConfig& c, float v) { c.optimizer.learning_rate = v; })
      .def_property(
          "augment", [](const TrainConfig& c) { return c.augment.enabled; },
          [](TrainConfig& c, bool v) { c.augment.enabled = v; });

  py::class_<Model>(m, "Model")
      .def_static(
          "init", [](std::uint64_t seed) { return Model{reference_arch(), init_params(reference_arch(), seed)}; },
          py::arg("seed") = 0, "Untrained reference model.")
      .def_static("load", &load_model, py::arg("path"))
      .def("save", [](const Model& mo, const std::filesystem::path& p) { save_model(mo.arch, mo.params, p); })
      .def("to_bytes",
           [](const Model& mo) {
             const auto b = serialize_model(mo.arch, mo.params);
             return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
           })
      .def_static("from_bytes",
                  [](const py::bytes& data) {
                    const std::string s = data;
                    return deserialize_model(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
                  })
      .def_property_readonly("arch", [](const Model& mo) { return mo.arch.to_text(); })
      .def_property_readonly("param_count", [](const Model& mo) { return param_count(mo.arch); })
      .def_property_readonly("params",
                             [](const Model& mo) {
                               py::dict d;
                               for (const auto& p : mo.params) d[py::str(p.name)] = to_array(p.value);
                               return d;
                             })
      .def("predict",
           [](const Model& mo, const FloatArray& image) {
             const Prediction p = predict(mo.arch, mo.params, to_tensor(image));
             return py::make_tuple(p.label, p.probability);
           })
      .def("evaluate", [](const Model& mo, const Dataset& ds) {
        const Evaluation e = evaluate(mo.arch, mo.params, ds);
        py::dict d;
        d["loss"] = e.loss;
        d["accuracy"] = e.accuracy;
        d["tp"] = e.confusion.tp;
        d["fp"] = e.confusion.fp;
        d["tn"] = e.confusion.tn;
        d["fn"] = e.confusion.fn;
        d["probs"] = e.probs;
        return d;
      });

  m.def(
      "train",
      [](const Dataset& ds, const TrainConfig& cfg, const std::function<void(py::dict)>& on_epoch) {
        EpochCallback cb;
        if (on_epoch) cb = [&](const EpochMetrics& e) { on_epoch(metrics_dict(e)); };
        TrainResult r = train(ds, reference_arch(), cfg, cb);
        py::list history;
        for (const auto& e : r.history) history.append(metrics_dict(e));
        return py::make_tuple(Model{reference_arch(), std::move(r.params)}, history);
      },
      py::arg("dataset"), py::arg("config") = TrainConfig{}, py::arg("on_epoch") = nullptr,
      "Train the reference model; returns (model, history).");

  m.def(
      "metrics_to_csv",
      [](const std::vector<py::dict>& history) {
        std::vector<EpochMetrics> h;
        for (const auto& d : history) h.push_back(metrics_from_dict(d));
        return metrics_to_csv(h);
      },
      py::arg("history"));
  m.def(
      "render_curves_svg",
      [](const std::vector<py::dict>& history) {
        std::vector<EpochMetrics> h;
        for (const auto& d : history) h.push_back(metrics_from_dict(d));
        return render_curves_svg(h);
      },
      py::arg("history"));
}
