#include "rreh/model_io.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "text_util.hpp"

namespace rreh {

namespace {

constexpr std::string_view kModelMagic = "RREH1\n";

template <typename T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out.push_back(',');
    out += std::to_string(values[i]);
  }
  return out;
}

std::vector<Index> parse_index_list(std::string_view text, const char* what) {
  std::vector<Index> values;
  if (detail::trim(text).empty()) return values;
  for (auto part : detail::split(text, ','))
    values.push_back(detail::parse_int<Index>(detail::trim(part), what));
  return values;
}

const std::string& header_get(const std::map<std::string, std::string>& header,
                              const std::string& key) {
  auto it = header.find(key);
  if (it == header.end()) throw FormatError("model header missing key: " + key);
  return it->second;
}

}  // namespace

void save_model(const HashModel& model, const std::filesystem::path& path) {
  if (model.modalities.empty()) throw ValidationError("cannot save an empty model");
  const bool identity = model.modalities.front().feature_map.is_identity();

  std::ostringstream header;
  header << "m=" << model.modality_count() << '\n';
  header << "r=" << model.bits << '\n';
  header << "beta=" << detail::format_double(model.hp.beta) << '\n';
  header << "theta=" << detail::format_double(model.hp.theta) << '\n';
  header << "gamma=" << detail::format_double(model.hp.gamma) << '\n';
  header << "lambda=" << detail::format_double(model.hp.lambda) << '\n';
  header << "a=" << model.hp.anchors << '\n';
  header << "k=" << join(model.hp.kernel_dims) << '\n';
  header << "kernel_exponent=" << to_string(model.hp.kernel_exponent) << '\n';
  header << "feature_map=" << (identity ? "identity" : "rbf") << '\n';
  header << "variant=" << to_string(model.hp.variant) << '\n';
  header << "literal_eq13=" << (model.hp.literal_eq13 ? 1 : 0) << '\n';
  header << "seed=" << model.hp.seed << '\n';
  header << "max_iters=" << model.hp.max_iters << '\n';
  header << "tol=" << detail::format_double(model.hp.tol) << '\n';
  header << "n_c=" << model.paired_permutation.size() << '\n';
  header << "nu=" << join(model.unpaired_counts) << '\n';
  header << "permutation=" << join(model.paired_permutation) << '\n';
  header << "iterations=" << model.iterations << '\n';
  header << "converged=" << (model.converged ? 1 : 0) << '\n';
  header << "bandwidth_rule=mean_offsample_to_sample\n";
  const std::string header_text = header.str();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open model for writing: " + path.string());
  out << kModelMagic << header_text.size() << '\n' << header_text;
  for (const auto& mod : model.modalities) {
    write_fmat(mod.centering_mean, out);
    if (!identity) {
      write_fmat(mod.feature_map.kernel->samples, out);
      Matrix delta(1, 1);
      delta(0, 0) = mod.feature_map.kernel->bandwidth;
      write_fmat(delta, out);
    }
    write_fmat(mod.projection, out);
  }
  if (!out) throw IoError("model write failed: " + path.string());
}

HashModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model: " + path.string());

  char magic[6] = {};
  in.read(magic, 6);
  if (in.gcount() != 6 || std::string_view(magic, 6) != kModelMagic)
    throw FormatError("bad RREH1 magic at byte offset 0");
  std::string len_line;
  char c = 0;
  while (in.get(c) && c != '\n') {
    len_line.push_back(c);
    if (len_line.size() > 32) throw FormatError("oversized RREH1 header length at byte offset 6");
  }
  const auto header_len = detail::parse_int<std::size_t>(detail::trim(len_line), "header length");
  std::string header_text(header_len, '\0');
  in.read(header_text.data(), static_cast<std::streamsize>(header_len));
  if (in.gcount() != static_cast<std::streamsize>(header_len))
    throw FormatError("truncated RREH1 header at byte offset " +
                      std::to_string(6 + len_line.size() + 1 +
                                     static_cast<std::size_t>(in.gcount())));

  std::map<std::string, std::string> header;
  for (auto line : detail::split(header_text, '\n')) {
    auto trimmed = detail::trim(line);
    if (trimmed.empty()) continue;
    auto pos = trimmed.find('=');
    if (pos == std::string_view::npos)
      throw FormatError("model header line without '=': " + std::string(trimmed));
    header[std::string(trimmed.substr(0, pos))] = std::string(trimmed.substr(pos + 1));
  }

  HashModel model;
  const Index m = detail::parse_int<Index>(header_get(header, "m"), "m");
  if (m < 1) throw FormatError("model header declares no modalities");
  model.bits = detail::parse_int<Index>(header_get(header, "r"), "r");
  model.hp.bits = model.bits;
  model.hp.beta = detail::parse_double(header_get(header, "beta"), "beta");
  model.hp.theta = detail::parse_double(header_get(header, "theta"), "theta");
  model.hp.gamma = detail::parse_double(header_get(header, "gamma"), "gamma");
  model.hp.lambda = detail::parse_double(header_get(header, "lambda"), "lambda");
  model.hp.anchors = detail::parse_int<Index>(header_get(header, "a"), "a");
  model.hp.kernel_dims = parse_index_list(header_get(header, "k"), "k");
  model.hp.kernel_exponent = kernel_exponent_from_string(header_get(header, "kernel_exponent"));
  model.hp.variant = variant_from_string(header_get(header, "variant"));
  model.hp.literal_eq13 = header_get(header, "literal_eq13") == "1";
  model.hp.seed = detail::parse_int<std::uint64_t>(header_get(header, "seed"), "seed");
  model.hp.max_iters = detail::parse_int<int>(header_get(header, "max_iters"), "max_iters");
  model.hp.tol = detail::parse_double(header_get(header, "tol"), "tol");
  model.paired_permutation = parse_index_list(header_get(header, "permutation"), "permutation");
  model.unpaired_counts = parse_index_list(header_get(header, "nu"), "nu");
  model.iterations = detail::parse_int<int>(header_get(header, "iterations"), "iterations");
  model.converged = header_get(header, "converged") == "1";
  const bool identity = header_get(header, "feature_map") == "identity";

  const auto n_c = detail::parse_int<std::size_t>(header_get(header, "n_c"), "n_c");
  if (model.paired_permutation.size() != n_c)
    throw FormatError("model permutation length disagrees with n_c");
  if (model.unpaired_counts.size() != static_cast<std::size_t>(m))
    throw FormatError("model nu list length disagrees with m");

  for (Index i = 0; i < m; ++i) {
    ModalityModel mod;
    mod.centering_mean = read_fmat(in).col(0);
    if (!identity) {
      KernelMap kernel;
      kernel.samples = read_fmat(in);
      kernel.bandwidth = read_fmat(in)(0, 0);
      kernel.exponent = model.hp.kernel_exponent;
      if (!(kernel.bandwidth > 0.0))
        throw FormatError("model kernel bandwidth must be positive");
      mod.feature_map.kernel = std::move(kernel);
    }
    mod.projection = read_fmat(in);
    if (mod.projection.rows() != model.bits)
      throw FormatError("model projection rows disagree with the code length");
    if (!identity && mod.projection.cols() != mod.feature_map.kernel->k())
      throw FormatError("model projection columns disagree with the kernel dimension");
    model.modalities.push_back(std::move(mod));
  }
  return model;
}

}  // namespace rreh
