// rreh: train and serve semi-paired cross-modal hash models.
//
// Subcommands: synth, split, train, encode, query, eval, sweep.
// Exit codes: 0 success, 2 validation, 3 numerical, 4 I/O.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rreh/codec_index.hpp"
#include "rreh/data_model.hpp"
#include "rreh/evaluation.hpp"
#include "rreh/model_io.hpp"
#include "rreh/trainer.hpp"

namespace fs = std::filesystem;
using rreh::Index;

namespace {

struct TrainArgs {
  std::string corpus;
  std::string model_path;
  std::string codes_dir;
  std::string log_path;
  Index bits = 32;
  double beta = 1e-2;
  double theta = 1e-5;
  double gamma = 1e-4;
  double lambda = 1e-3;
  Index anchors = 600;
  bool anchors_explicit = false;
  std::vector<Index> kernel_dims;
  std::string variant = "full";
  int max_iters = 50;
  double tol = 1e-5;
  std::string kernel_exponent = "sq";
  bool literal_eq13 = false;
  bool dump_recon = false;
};

rreh::Hyperparams make_hyperparams(const TrainArgs& args, std::uint64_t seed, Index paired_count) {
  rreh::Hyperparams hp;
  hp.bits = args.bits;
  hp.beta = args.beta;
  hp.theta = args.theta;
  hp.gamma = args.gamma;
  hp.lambda = args.lambda;
  // The documented paper-scale defaults are clipped to the data; explicitly
  // requested values stay strict.
  hp.anchors = args.anchors_explicit ? args.anchors : std::min<Index>(args.anchors, paired_count);
  hp.kernel_dims = args.kernel_dims;
  hp.max_iters = args.max_iters;
  hp.tol = args.tol;
  hp.seed = seed;
  hp.kernel_exponent = rreh::kernel_exponent_from_string(args.kernel_exponent);
  hp.literal_eq13 = args.literal_eq13;
  hp.variant = rreh::variant_from_string(args.variant);
  return hp;
}

void add_train_options(CLI::App* cmd, TrainArgs& args) {
  cmd->add_option("--bits", args.bits, "code length r")->capture_default_str();
  cmd->add_option("--beta", args.beta, "unpaired-reconstruction weight")->capture_default_str();
  cmd->add_option("--theta", args.theta, "code-quantization weight")->capture_default_str();
  cmd->add_option("--gamma", args.gamma, "projection ridge")->capture_default_str();
  cmd->add_option("--lambda", args.lambda, "reconstruction ridge")->capture_default_str();
  cmd->add_option("--anchors", args.anchors, "reconstruction anchor count (default clipped to the paired count)")
      ->capture_default_str();
  cmd->add_option("--kernel-dims", args.kernel_dims,
                  "per-modality kernel dimensions (default 500,1000 clipped)")
      ->delimiter(',');
  cmd->add_option("--variant", args.variant, "full | k | r | x")
      ->check(CLI::IsMember({"full", "k", "r", "x"}))
      ->capture_default_str();
  cmd->add_option("--max-iters", args.max_iters, "iteration cap")->capture_default_str();
  cmd->add_option("--tol", args.tol, "relative objective tolerance")->capture_default_str();
  cmd->add_option("--kernel-exponent", args.kernel_exponent, "sq | l1")
      ->check(CLI::IsMember({"sq", "l1"}))
      ->capture_default_str();
  cmd->add_flag("--literal-eq13", args.literal_eq13,
                "use the printed non-anchor update (no theta on the code term)");
}

void write_ranking_csv(const std::vector<std::vector<rreh::RankedHit>>& rankings,
                       const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw rreh::IoError("cannot open for writing: " + path.string());
  out << "query,id,distance\n";
  for (std::size_t q = 0; q < rankings.size(); ++q)
    for (const auto& hit : rankings[q])
      out << q << ',' << hit.id << ',' << hit.distance << '\n';
  if (!out) throw rreh::IoError("CSV write failed: " + path.string());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RREH: reconstruction-relations-embedded hashing for semi-paired "
               "cross-modal retrieval"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key = value config file; explicit flags win");
  std::uint64_t seed = 0;
  app.add_option("--seed", seed, "RNG seed")->capture_default_str();

  // synth
  auto* synth = app.add_subcommand("synth", "generate a clustered synthetic corpus");
  synth->fallthrough();
  std::string synth_out;
  rreh::SynthParams synth_params;
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--classes", synth_params.classes)->capture_default_str();
  synth->add_option("--per-class", synth_params.per_class)->capture_default_str();
  synth->add_option("--dims", synth_params.dims, "per-modality feature dimensions")
      ->delimiter(',');
  synth->add_option("--pairing", synth_params.pairing_ratio, "paired fraction in (0,1]")
      ->capture_default_str();
  synth->add_option("--noise", synth_params.noise_sigma)->capture_default_str();
  synth->callback([&] {
    synth_params.seed = seed;
    rreh::save_corpus(rreh::synth_corpus(synth_params), synth_out);
  });

  // split
  auto* split = app.add_subcommand("split", "unpair a random fraction of a fully paired corpus");
  split->fallthrough();
  std::string split_in, split_out;
  double split_pairing = 0.5;
  split->add_option("--in", split_in, "input corpus directory or manifest")->required();
  split->add_option("--out", split_out, "output directory")->required();
  split->add_option("--pairing", split_pairing, "paired fraction to keep, in (0,1]")->required();
  split->callback([&] {
    rreh::save_corpus(rreh::split_corpus(rreh::load_corpus(split_in), split_pairing, seed),
                      split_out);
  });

  // train
  auto* train = app.add_subcommand("train", "train hash functions on a corpus");
  train->fallthrough();
  TrainArgs train_args;
  train->add_option("--corpus", train_args.corpus, "corpus directory or manifest")->required();
  train->add_option("--model", train_args.model_path, "output model file")->required();
  train->add_option("--codes-out", train_args.codes_dir,
                    "directory for training-set code files (default: model directory)");
  train->add_option("--log", train_args.log_path, "training log CSV (default: <model>_log.csv)");
  add_train_options(train, train_args);
  bool dump_recon = false;
  train->add_flag("--dump-recon", dump_recon, "dump reconstruction factors as FMAT");
  train->callback([&] {
    train_args.anchors_explicit = train->count("--anchors") > 0;
    train_args.dump_recon = dump_recon;
    const auto corpus = rreh::load_corpus(train_args.corpus);
    const auto hp = make_hyperparams(train_args, seed, corpus.paired_count());
    const auto result = rreh::train(corpus, hp);
    rreh::save_model(result.model, train_args.model_path);

    const fs::path model_path(train_args.model_path);
    const std::string stem = model_path.stem().string();
    const fs::path codes_dir =
        train_args.codes_dir.empty() ? model_path.parent_path() : fs::path(train_args.codes_dir);
    if (!train_args.codes_dir.empty()) fs::create_directories(codes_dir);
    for (Index i = 0; i < corpus.modality_count(); ++i) {
      const auto codes = rreh::encode(result.model, i,
                                      corpus.modalities[static_cast<std::size_t>(i)].features);
      rreh::write_bcod(rreh::pack_codes(codes),
                       codes_dir / (stem + "_codes_" + std::to_string(i) + ".bcod"));
    }
    const fs::path log_path = train_args.log_path.empty()
                                  ? model_path.parent_path() / (stem + "_log.csv")
                                  : fs::path(train_args.log_path);
    rreh::write_train_log_csv(result.model.log, log_path);
    if (train_args.dump_recon) {
      for (Index i = 0; i < corpus.modality_count(); ++i) {
        const auto& factor = result.factors[static_cast<std::size_t>(i)];
        if (factor.unpaired_count() > 0)
          rreh::write_fmat(factor.matrix,
                           codes_dir / (stem + "_recon_" + std::to_string(i) + ".fmat"));
      }
    }
  });

  // encode
  auto* encode = app.add_subcommand("encode", "hash a feature matrix with a trained model");
  encode->fallthrough();
  std::string enc_model, enc_in, enc_out;
  Index enc_modality = 0;
  encode->add_option("--model", enc_model)->required();
  encode->add_option("--modality", enc_modality, "modality index of the input")->required();
  encode->add_option("--in", enc_in, "FMAT or CSV feature file")->required();
  encode->add_option("--out", enc_out, "output BCOD file")->required();
  encode->callback([&] {
    const auto model = rreh::load_model(enc_model);
    const auto signs = rreh::encode(model, enc_modality, rreh::read_features(enc_in));
    rreh::write_bcod(rreh::pack_codes(signs), enc_out);
  });

  // query
  auto* query_cmd = app.add_subcommand("query", "rank a code database against query codes");
  query_cmd->fallthrough();
  std::string q_db, q_queries, q_out;
  Index q_topk = 0;
  query_cmd->add_option("--db", q_db, "gallery BCOD file")->required();
  query_cmd->add_option("--queries", q_queries, "query BCOD file")->required();
  query_cmd->add_option("--top-k", q_topk, "results per query (0 = full ranking)")
      ->capture_default_str();
  query_cmd->add_option("--out", q_out, "output CSV")->required();
  query_cmd->callback([&] {
    const auto db = rreh::read_bcod(q_db);
    const auto queries = rreh::read_bcod(q_queries);
    if (db.bits() != queries.bits())
      throw rreh::ValidationError("query and database code lengths differ");
    std::optional<Index> top_k;
    if (q_topk > 0) top_k = q_topk;
    std::vector<std::vector<rreh::RankedHit>> rankings;
    for (Index q = 0; q < queries.count(); ++q)
      rankings.push_back(rreh::query(db, queries.code(q), top_k));
    write_ranking_csv(rankings, q_out);
  });

  // eval
  auto* eval = app.add_subcommand("eval", "MAP and PR curve for one retrieval direction");
  eval->fallthrough();
  std::string e_queries, e_qlabels, e_gallery, e_glabels, e_direction = "I2T",
              e_method = "RREH", e_out, e_pr_out;
  double e_pairing = -1.0;
  eval->add_option("--queries", e_queries, "query BCOD file")->required();
  eval->add_option("--query-labels", e_qlabels, "query label CSV")->required();
  eval->add_option("--gallery", e_gallery, "gallery BCOD file")->required();
  eval->add_option("--gallery-labels", e_glabels, "gallery label CSV")->required();
  eval->add_option("--direction", e_direction)->capture_default_str();
  eval->add_option("--method", e_method)->capture_default_str();
  eval->add_option("--pairing-ratio", e_pairing, "recorded in the CSV when given");
  eval->add_option("--out", e_out, "MAP CSV")->required();
  eval->add_option("--pr-out", e_pr_out, "PR-curve CSV");
  eval->callback([&] {
    const auto queries = rreh::read_bcod(e_queries);
    const auto gallery = rreh::read_bcod(e_gallery);
    const auto qlabels = rreh::read_labels_csv(e_qlabels);
    const auto glabels = rreh::read_labels_csv(e_glabels);
    if (queries.bits() != gallery.bits())
      throw rreh::ValidationError("query and gallery code lengths differ");
    rreh::RetrievalRun run{&queries, &qlabels, &gallery, &glabels, e_direction};
    rreh::MapCsvRow row;
    row.method = e_method;
    row.direction = e_direction;
    row.bits = queries.bits();
    if (eval->count("--pairing-ratio")) row.pairing_ratio = e_pairing;
    row.result = rreh::mean_average_precision(run);
    rreh::write_map_csv({row}, e_out);
    if (!e_pr_out.empty()) rreh::write_pr_csv(rreh::pr_curve(run), e_pr_out);
  });

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "train and evaluate over a beta/theta grid");
  sweep_cmd->fallthrough();
  TrainArgs sweep_args;
  sweep_args.bits = 64;
  std::string sweep_out;
  std::vector<double> beta_grid, theta_grid;
  sweep_cmd->add_option("--corpus", sweep_args.corpus, "labelled corpus directory or manifest")
      ->required();
  sweep_cmd->add_option("--out", sweep_out, "output CSV")->required();
  sweep_cmd->add_option("--beta-grid", beta_grid, "comma-separated beta values")->delimiter(',');
  sweep_cmd->add_option("--theta-grid", theta_grid, "comma-separated theta values")
      ->delimiter(',');
  add_train_options(sweep_cmd, sweep_args);
  sweep_cmd->callback([&] {
    sweep_args.anchors_explicit = sweep_cmd->count("--anchors") > 0;
    const auto corpus = rreh::load_corpus(sweep_args.corpus);
    const auto base = make_hyperparams(sweep_args, seed, corpus.paired_count());
    const auto grid = rreh::default_sweep_grid();
    if (beta_grid.empty()) beta_grid.assign(grid.begin(), grid.end());
    if (theta_grid.empty()) theta_grid.assign(grid.begin(), grid.end());
    rreh::write_sweep_csv(rreh::sweep(corpus, base, beta_grid, theta_grid), sweep_out);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const rreh::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const rreh::NumericalError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const rreh::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
