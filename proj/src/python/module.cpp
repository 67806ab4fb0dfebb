#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "rreh/codec_index.hpp"
#include "rreh/data_model.hpp"
#include "rreh/evaluation.hpp"
#include "rreh/model_io.hpp"
#include "rreh/trainer.hpp"

namespace py = pybind11;
using namespace rreh;

namespace {

Hyperparams make_hp(Index bits, double beta, double theta, double gamma, double lambda,
                    std::optional<Index> anchors, std::optional<std::vector<Index>> kernel_dims,
                    int max_iters, double tol, std::uint64_t seed, const std::string& variant,
                    const std::string& kernel_exponent, bool literal_eq13, Index paired_count) {
  Hyperparams hp;
  hp.bits = bits;
  hp.beta = beta;
  hp.theta = theta;
  hp.gamma = gamma;
  hp.lambda = lambda;
  hp.anchors = anchors ? *anchors : std::min<Index>(600, paired_count);
  if (kernel_dims) hp.kernel_dims = *kernel_dims;
  hp.max_iters = max_iters;
  hp.tol = tol;
  hp.seed = seed;
  hp.variant = variant_from_string(variant);
  hp.kernel_exponent = kernel_exponent_from_string(kernel_exponent);
  hp.literal_eq13 = literal_eq13;
  return hp;
}

}  // namespace

PYBIND11_MODULE(_rreh, m) {
  m.doc() = "Reconstruction-relations-embedded hashing for semi-paired cross-modal retrieval";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<IoError>(m, "IoError", PyExc_IOError);

  py::class_<MultiModalCorpus>(m, "Corpus")
      .def_property_readonly("modality_count", &MultiModalCorpus::modality_count)
      .def_property_readonly("paired_count", &MultiModalCorpus::paired_count)
      .def("features",
           [](const MultiModalCorpus& c, Index i) {
             if (i < 0 || i >= c.modality_count()) throw ValidationError("modality out of range");
             return c.modalities[static_cast<std::size_t>(i)].features;
           },
           py::arg("modality"))
      .def("unpaired_count",
           [](const MultiModalCorpus& c, Index i) {
             if (i < 0 || i >= c.modality_count()) throw ValidationError("modality out of range");
             return c.modalities[static_cast<std::size_t>(i)].unpaired_count;
           },
           py::arg("modality"))
      .def("labels",
           [](const MultiModalCorpus& c, Index i) -> Eigen::MatrixXi {
             if (!c.has_labels()) throw ValidationError("corpus has no labels");
             if (i < 0 || i >= c.modality_count()) throw ValidationError("modality out of range");
             return c.labels[static_cast<std::size_t>(i)].entries();
           },
           py::arg("modality"));

  m.def("synth_corpus",
        [](int classes, int per_class, std::vector<Index> dims, double pairing_ratio,
           double noise_sigma, std::uint64_t seed) {
          SynthParams params{classes, per_class, std::move(dims), pairing_ratio, noise_sigma,
                             seed};
          return synth_corpus(params);
        },
        py::arg("classes") = 4, py::arg("per_class") = 100,
        py::arg("dims") = std::vector<Index>{16, 24}, py::arg("pairing_ratio") = 0.5,
        py::arg("noise_sigma") = 0.1, py::arg("seed") = 0);
  m.def("split_corpus", &split_corpus, py::arg("corpus"), py::arg("pairing_ratio"),
        py::arg("seed") = 0);
  m.def("save_corpus", &save_corpus, py::arg("corpus"), py::arg("directory"));
  m.def("load_corpus", &load_corpus, py::arg("path"));

  py::class_<HashModel>(m, "Model")
      .def_property_readonly("bits", [](const HashModel& model) { return model.bits; })
      .def_property_readonly("modality_count", &HashModel::modality_count)
      .def_property_readonly("iterations", [](const HashModel& model) { return model.iterations; })
      .def_property_readonly("converged", [](const HashModel& model) { return model.converged; })
      .def_property_readonly("objective_log",
                             [](const HashModel& model) {
                               std::vector<double> values;
                               for (const auto& entry : model.log)
                                 values.push_back(entry.after_codes);
                               return values;
                             })
      .def("encode",
           [](const HashModel& model, Index modality, const Matrix& samples) {
             return encode(model, modality, samples);
           },
           py::arg("modality"), py::arg("samples"))
      .def("save", &save_model, py::arg("path"))
      .def_static("load", &load_model, py::arg("path"));

  m.def("train",
        [](const MultiModalCorpus& corpus, Index bits, double beta, double theta, double gamma,
           double lambda, std::optional<Index> anchors,
           std::optional<std::vector<Index>> kernel_dims, int max_iters, double tol,
           std::uint64_t seed, const std::string& variant, const std::string& kernel_exponent,
           bool literal_eq13) {
          const auto hp =
              make_hp(bits, beta, theta, gamma, lambda, anchors, std::move(kernel_dims),
                      max_iters, tol, seed, variant, kernel_exponent, literal_eq13,
                      corpus.paired_count());
          auto result = train(corpus, hp);
          return py::make_tuple(std::move(result.model), std::move(result.codes));
        },
        py::arg("corpus"), py::arg("bits") = 32, py::arg("beta") = 1e-2,
        py::arg("theta") = 1e-5, py::arg("gamma") = 1e-4, py::arg("lambda") = 1e-3,
        py::arg("anchors") = std::nullopt, py::arg("kernel_dims") = std::nullopt,
        py::arg("max_iters") = 50, py::arg("tol") = 1e-5, py::arg("seed") = 0,
        py::arg("variant") = "full", py::arg("kernel_exponent") = "sq",
        py::arg("literal_eq13") = false);

  py::class_<CodeDatabase>(m, "CodeDatabase")
      .def_property_readonly("bits", &CodeDatabase::bits)
      .def_property_readonly("count", &CodeDatabase::count)
      .def("unpack", [](const CodeDatabase& db) { return unpack_codes(db); })
      .def("query",
           [](const CodeDatabase& db, const Matrix& sign_column, std::optional<Index> top_k) {
             if (sign_column.cols() != 1)
               throw ValidationError("query expects a single sign column");
             const auto packed = pack_codes(sign_column);
             std::vector<std::pair<std::uint64_t, Index>> out;
             for (const auto& hit : query(db, packed.code(0), top_k))
               out.emplace_back(hit.id, hit.distance);
             return out;
           },
           py::arg("code"), py::arg("top_k") = std::nullopt)
      .def("save", [](const CodeDatabase& db, const std::filesystem::path& path) {
        write_bcod(db, path);
      })
      .def_static("load",
                  [](const std::filesystem::path& path) { return read_bcod(path); });

  m.def("pack_codes", &pack_codes, py::arg("signs"));
  m.def("hamming_distance",
        [](const Matrix& x, const Matrix& y) {
          if (x.cols() != 1 || y.cols() != 1 || x.rows() != y.rows())
            throw ValidationError("hamming_distance expects two sign columns of equal length");
          return hamming_distance(pack_codes(x).code(0), pack_codes(y).code(0));
        },
        py::arg("x"), py::arg("y"));

  m.def("evaluate",
        [](const CodeDatabase& queries, const Eigen::MatrixXi& query_labels,
           const CodeDatabase& gallery, const Eigen::MatrixXi& gallery_labels,
           const std::string& direction) {
          const LabelMatrix ql(query_labels), gl(gallery_labels);
          RetrievalRun run{&queries, &ql, &gallery, &gl, direction};
          const auto result = mean_average_precision(run);
          py::dict out;
          out["map"] = result.map;
          out["evaluated"] = result.evaluated;
          out["skipped"] = result.skipped;
          return out;
        },
        py::arg("queries"), py::arg("query_labels"), py::arg("gallery"),
        py::arg("gallery_labels"), py::arg("direction") = "I2T");

  m.def("pr_curve",
        [](const CodeDatabase& queries, const Eigen::MatrixXi& query_labels,
           const CodeDatabase& gallery, const Eigen::MatrixXi& gallery_labels) {
          const LabelMatrix ql(query_labels), gl(gallery_labels);
          RetrievalRun run{&queries, &ql, &gallery, &gl, ""};
          const auto points = pr_curve(run);
          Matrix out(static_cast<Index>(points.size()), 3);
          for (Index i = 0; i < out.rows(); ++i) {
            out(i, 0) = static_cast<double>(points[static_cast<std::size_t>(i)].rank);
            out(i, 1) = points[static_cast<std::size_t>(i)].precision;
            out(i, 2) = points[static_cast<std::size_t>(i)].recall;
          }
          return out;
        },
        py::arg("queries"), py::arg("query_labels"), py::arg("gallery"),
        py::arg("gallery_labels"));

  m.def("write_fmat",
        [](const Matrix& matrix, const std::filesystem::path& path) { write_fmat(matrix, path); },
        py::arg("matrix"), py::arg("path"));
  m.def("read_fmat",
        [](const std::filesystem::path& path) { return read_fmat(path); }, py::arg("path"));

  m.attr("__version__") = "0.1.0";
}
