#include "cli.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <ostream>
#include <set>

#include <CLI11.hpp>
#include <json.hpp>

#include "graspkit/config.hpp"
#include "graspkit/dataset.hpp"
#include "graspkit/features.hpp"
#include "graspkit/fixtures.hpp"
#include "graspkit/metrics.hpp"

namespace graspkit::cli {

using nlohmann::json;

Command parse_args(const std::vector<std::string>& args) {
  Command cmd;
  CLI::App app{"graspkit: physics-aware grasp dataset generation and evaluation", "graspkit"};
  app.require_subcommand(1, 1);

  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", cmd.config, "TOML or JSON config file");
    sub->add_option("--set", cmd.overrides, "Override a config key (key.path=value); repeatable");
    sub->add_option("--seed", cmd.seed, "Global seed");
  };

  auto* gen = app.add_subcommand("generate", "Generate a dataset from the configured meshes");
  add_config(gen);
  gen->add_option("--workers", cmd.workers, "Worker threads")->check(CLI::PositiveNumber);
  gen->add_option("--out", cmd.out, "Output directory")->required();

  auto* ver = app.add_subcommand("verify", "Re-check every record of a dataset");
  ver->add_option("dataset,--dataset", cmd.dataset, "Dataset directory")->required();

  auto* ev = app.add_subcommand("evaluate", "Compare predicted maps and grasps with a dataset");
  add_config(ev);
  ev->add_option("--pred", cmd.pred, "Prediction JSONL file or dataset directory")->required();
  ev->add_option("--gt", cmd.gt, "Ground-truth dataset directory")->required();
  ev->add_option("--out", cmd.out, "Report JSON path (stdout when omitted)");
  ev->add_option("--csv", cmd.csv, "Per-instance CSV path");

  auto* vis = app.add_subcommand("export-vis", "Write colored PLY and summary text per instance");
  vis->add_option("--dataset", cmd.dataset, "Dataset directory")->required();
  vis->add_option("--instance", cmd.instance, "Single instance id (all when omitted)");
  vis->add_option("--out", cmd.out, "PLY path for one instance, directory otherwise")->required();

  auto* tr = app.add_subcommand("train-ref", "Overfit the reference bridge network");
  add_config(tr);
  tr->add_option("--dataset", cmd.dataset, "Dataset directory (desk fixtures when omitted)");
  tr->add_option("--steps", cmd.steps, "Gradient steps");
  tr->add_option("--out", cmd.out, "Directory for checkpoint.bin and train_log.csv")->required();

  auto* info = app.add_subcommand("info", "Dataset statistics or the resolved defaults");
  add_config(info);
  info->add_option("--dataset", cmd.dataset, "Dataset directory");
  info->add_flag("--defaults", cmd.defaults, "Print every config default");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    cmd.verb = "help";
    cmd.help = app.help();
    for (auto* sub : app.get_subcommands()) cmd.help = sub->help();
    return cmd;
  } catch (const CLI::ParseError& e) {
    throw UsageError(std::string(e.what()) + "\n" + app.help());
  }
  cmd.verb = app.get_subcommands().front()->get_name();
  if (cmd.verb == "info" && !cmd.defaults && cmd.dataset.empty())
    throw UsageError("info needs --dataset or --defaults");
  return cmd;
}

namespace {

Config resolve_config(const Command& cmd) {
  Config config = cmd.config.empty() ? Config{} : load_config(cmd.config);
  config = apply_overrides(config, cmd.overrides);
  if (cmd.seed) config.seed = *cmd.seed;
  if (cmd.workers) {
    if (*cmd.workers < 1) throw UsageError("--workers must be >= 1");
    config.workers = *cmd.workers;
  }
  return config;
}

std::vector<ObjectMesh> meshes_for(const Config& config) {
  if (!config.meshes.empty()) return load_config_meshes(config);
  std::vector<ObjectMesh> out;
  for (auto& [id, mesh] : desk_fixtures())
    out.push_back({id, "builtin:" + id, std::make_shared<const PartMesh>(std::move(mesh))});
  return out;
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path.string());
  f << j.dump(2) << '\n';
  if (!f) throw IoError("failed writing " + path.string());
}

int do_generate(const Command& cmd, std::ostream& out, std::ostream& err) {
  const Config config = resolve_config(cmd);
  const auto objects = meshes_for(config);
  auto result = generate_dataset(objects, config);
  for (const auto& f : result.failures) err << "warning: " << f.instance_id << ": " << f.message << '\n';
  if (result.records.empty()) throw NoPositiveGrasps("no instance produced a usable record");
  write_records(cmd.out, result.records);
  write_json_file(cmd.out / "split.json", to_json(split_dataset(result.records, config.split, config.seed)));
  out << json{{"records", result.records.size()},
              {"failures", result.failures.size()},
              {"config_hash", config_hash(config)}}
             .dump()
      << '\n';
  return result.failures.empty() ? kOk : kNoPositives;
}

int do_verify(const Command& cmd, std::ostream& out, std::ostream& err) {
  std::size_t total = 0, valid = 0, positives = 0;
  for (const auto& entry : read_index(cmd.dataset)) {
    ++total;
    const std::string id = entry.value("instance_id", std::string("?"));
    try {
      const auto record = read_record(cmd.dataset, entry);
      const auto problems = verify_record(record);
      for (const auto& p : problems) err << id << ": " << p << '\n';
      if (problems.empty()) {
        ++valid;
        positives += record.positive_pairs.size();
      }
    } catch (const Error& e) {
      err << id << ": " << e.what() << '\n';
    }
  }
  out << json{{"records", total}, {"valid", valid}, {"positive_pairs_verified", positives}}.dump() << '\n';
  return valid == total ? kOk : kVerification;
}

struct Prediction {
  Eigen::VectorXd prob;
  std::vector<IndexPair> grasps;
  // Exact contacts when the prediction is itself a dataset; point-index
  // pairs sit up to a sample spacing off the labeled contact line.
  std::vector<GraspCandidate> contacts;
};

GraspCandidate candidate_from(const StoredGrasp& g) {
  GraspCandidate c;
  c.contact1 = {g.position[0], g.normal[0], g.part[0], 0};
  c.contact2 = {g.position[1], g.normal[1], g.part[1], 0};
  c.width = (g.position[1] - g.position[0]).norm();
  return c;
}

std::map<std::string, Prediction> load_predictions(const std::filesystem::path& path) {
  std::map<std::string, Prediction> preds;
  if (std::filesystem::is_directory(path)) {
    for (const auto& r : read_records(path)) {
      Prediction p{r.prob, r.positive_pairs, {}};
      for (const auto& g : r.positive_grasps) p.contacts.push_back(candidate_from(g));
      preds[r.instance_id] = std::move(p);
    }
    return preds;
  }
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const auto j = json::parse(line);
      Prediction p;
      const auto prob = j.at("prob").get<std::vector<double>>();
      p.prob = Eigen::Map<const Eigen::VectorXd>(prob.data(), static_cast<Eigen::Index>(prob.size()));
      if (j.contains("grasps"))
        for (const auto& g : j["grasps"]) p.grasps.push_back({g.at(0).get<std::uint32_t>(), g.at(1).get<std::uint32_t>()});
      preds[j.at("instance_id").get<std::string>()] = std::move(p);
    } catch (const json::exception& e) {
      throw SchemaVersionMismatch("prediction line: " + std::string(e.what()));
    }
  }
  return preds;
}

int do_evaluate(const Command& cmd, std::ostream& out, std::ostream& err) {
  const Config config = resolve_config(cmd);
  const auto gt = read_records(cmd.gt);
  const auto preds = load_predictions(cmd.pred);

  std::vector<std::vector<GraspCandidate>> ranked;
  std::vector<InstanceSpec> instances;
  std::vector<const DatasetRecord*> used;
  std::vector<MetricsReport> maps;
  for (const auto& r : gt) {
    auto it = preds.find(r.instance_id);
    if (it == preds.end()) {
      err << "warning: no prediction for " << r.instance_id << '\n';
      continue;
    }
    if (static_cast<std::size_t>(it->second.prob.size()) != r.points.size())
      throw ShapeMismatch(r.instance_id + ": prediction length differs from the point cloud");
    maps.push_back(compare_maps(it->second.prob, r.prob, config.auc_threshold));
    std::vector<GraspCandidate> list = it->second.contacts;
    if (list.empty()) {
      for (const auto& g : it->second.grasps) {
        if (g[0] >= r.points.size() || g[1] >= r.points.size())
          throw ShapeMismatch(r.instance_id + ": grasp index out of range");
        GraspCandidate c;
        c.contact1 = {r.points[g[0]], r.normals[g[0]].normalized(), r.point_part[g[0]], 0};
        c.contact2 = {r.points[g[1]], r.normals[g[1]].normalized(), r.point_part[g[1]], 0};
        c.width = (c.contact2.position - c.contact1.position).norm();
        list.push_back(c);
      }
    }
    ranked.push_back(std::move(list));
    instances.push_back(instance_from_record(r));
    used.push_back(&r);
  }
  if (used.empty()) throw ShapeMismatch("no instance has both a prediction and ground truth");

  // Each instance is judged under the physics it was labeled with.
  SuccessReport success;
  std::size_t hit1 = 0, hit5 = 0;
  for (std::size_t i = 0; i < used.size(); ++i) {
    const auto one = success_report({ranked[i]}, {instances[i]}, config.gripper, used[i]->contact, used[i]->label);
    success.first_success.push_back(one.first_success.front());
    hit1 += one.first_success.front() == 0;
    hit5 += one.first_success.front() >= 0;
  }
  success.top1 = static_cast<double>(hit1) / static_cast<double>(used.size());
  success.top5 = static_cast<double>(hit5) / static_cast<double>(used.size());

  MetricsReport mean;
  for (const auto& m : maps) {
    mean.kld += m.kld / static_cast<double>(maps.size());
    mean.sim += m.sim / static_cast<double>(maps.size());
    mean.auc_j += m.auc_j / static_cast<double>(maps.size());
  }
  const json report = {{"instances", used.size()}, {"kld", mean.kld},       {"sim", mean.sim},
                       {"auc_j", mean.auc_j},       {"top1", success.top1}, {"top5", success.top5},
                       {"kld_direction", "KL(gt || pred)"}};
  if (cmd.out.empty()) {
    out << report.dump(2) << '\n';
  } else {
    write_json_file(cmd.out, report);
  }
  if (!cmd.csv.empty()) {
    std::ofstream csv(cmd.csv);
    if (!csv) throw IoError("cannot write " + cmd.csv.string());
    csv.precision(17);
    csv << "instance_id,kld,sim,auc_j,first_success\n";
    for (std::size_t i = 0; i < used.size(); ++i)
      csv << used[i]->instance_id << ',' << maps[i].kld << ',' << maps[i].sim << ',' << maps[i].auc_j << ','
          << success.first_success[i] << '\n';
    if (!csv) throw IoError("failed writing " + cmd.csv.string());
  }
  return kOk;
}

int do_export_vis(const Command& cmd, std::ostream& out, std::ostream&) {
  std::size_t written = 0;
  const auto index = read_index(cmd.dataset);
  if (!cmd.instance.empty()) {
    auto it = std::find_if(index.begin(), index.end(),
                           [&](const json& e) { return e.value("instance_id", std::string()) == cmd.instance; });
    if (it == index.end()) throw IoError("no instance " + cmd.instance + " in " + cmd.dataset.string());
    const auto r = read_record(cmd.dataset, *it);
    write_colored_ply(cmd.out, r.points, r.prob);
    auto txt = cmd.out;
    write_summary(txt.replace_extension(".txt"), r);
    written = 1;
  } else {
    std::filesystem::create_directories(cmd.out);
    for (const auto& e : index) {
      const auto r = read_record(cmd.dataset, e);
      write_colored_ply(cmd.out / (r.instance_id + ".ply"), r.points, r.prob);
      write_summary(cmd.out / (r.instance_id + ".txt"), r);
      ++written;
    }
  }
  out << json{{"exported", written}}.dump() << '\n';
  return kOk;
}

int do_train(const Command& cmd, std::ostream& out, std::ostream&) {
  Config config = resolve_config(cmd);
  if (cmd.steps) config.train.steps = *cmd.steps;
  std::vector<DatasetRecord> records;
  if (!cmd.dataset.empty()) {
    records = read_records(cmd.dataset);
    if (records.size() > static_cast<std::size_t>(config.train.instances))
      records.resize(static_cast<std::size_t>(config.train.instances));
  } else {
    const auto objects = meshes_for(config);
    for (int k = 0; static_cast<int>(records.size()) < config.train.instances; ++k) {
      const auto& o = objects[static_cast<std::size_t>(k) % objects.size()];
      const auto id = make_instance_id(o.object_id, k / static_cast<int>(objects.size()));
      records.push_back(
          generate_instance(o.mesh, o.object_id, o.mesh_ref, id, derive_seed(config.seed, id), config).record);
    }
  }
  if (records.empty()) throw NoPositiveGrasps("no training records");

  const BridgeDims dims;
  std::vector<TrainingExample<double>> examples;
  for (const auto& r : records)
    examples.push_back(
        training_example(r, dims, config.train.points_per_instance, config.train.max_pairs, config.seed));
  const auto result = train_overfit(examples, dims, config.loss, config.train.steps, config.train.lr, config.seed);

  std::filesystem::create_directories(cmd.out);
  save_checkpoint(cmd.out / "checkpoint.bin", result.params);
  write_train_log(cmd.out / "train_log.csv", result.log);
  const auto& last = result.log.back();
  out << json{{"instances", examples.size()}, {"steps", config.train.steps}, {"L_g", last.global},
              {"L_emb", last.embedding},      {"L_match", last.match},       {"combined", last.combined}}
             .dump()
      << '\n';
  return kOk;
}

int do_info(const Command& cmd, std::ostream& out, std::ostream&) {
  const Config config = resolve_config(cmd);
  if (cmd.defaults) {
    out << to_json(config).dump(2) << '\n';
    return kOk;
  }
  const auto records = read_records(cmd.dataset);
  std::map<std::string, std::size_t> per_object, instances_per_material, parts_per_material;
  std::size_t hard = 0, positives = 0, negatives = 0;
  std::set<std::string> hashes;
  for (const auto& r : records) {
    ++per_object[r.object_id];
    std::set<std::string> mats;
    for (const auto& p : r.parts) {
      ++parts_per_material[p.material.name];
      mats.insert(p.material.name);
    }
    for (const auto& m : mats) ++instances_per_material[m];
    hard += r.hard.is_hard;
    positives += r.positive_pairs.size();
    negatives += r.negative_pairs.size();
    hashes.insert(r.config_hash);
  }
  out << json{{"instances", records.size()},
              {"instances_per_object", per_object},
              {"instances_per_material", instances_per_material},
              {"parts_per_material", parts_per_material},
              {"hard", hard},
              {"positive_pairs", positives},
              {"negative_pairs", negatives},
              {"config_hashes", hashes}}
             .dump(2)
      << '\n';
  return kOk;
}

}  // namespace

int execute(const Command& cmd, std::ostream& out, std::ostream& err) {
  if (cmd.verb == "help") {
    out << cmd.help;
    return kOk;
  }
  if (cmd.verb == "generate") return do_generate(cmd, out, err);
  if (cmd.verb == "verify") return do_verify(cmd, out, err);
  if (cmd.verb == "evaluate") return do_evaluate(cmd, out, err);
  if (cmd.verb == "export-vis") return do_export_vis(cmd, out, err);
  if (cmd.verb == "train-ref") return do_train(cmd, out, err);
  if (cmd.verb == "info") return do_info(cmd, out, err);
  throw UsageError("unknown verb '" + cmd.verb + "'");
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    return execute(parse_args(args), out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const IoError& e) {
    err << "io error: " << e.what() << '\n';
    return kIo;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return kParse;
  } catch (const LabelError& e) {
    err << "label error: " << e.what() << '\n';
    return kParse;
  } catch (const SchemaVersionMismatch& e) {
    err << "schema error: " << e.what() << '\n';
    return kParse;
  } catch (const VerificationError& e) {
    err << "verification failed: " << e.what() << '\n';
    return kVerification;
  } catch (const SolverFailure& e) {
    err << "solver failure: " << e.what() << '\n';
    return kSolver;
  } catch (const NoPositiveGrasps& e) {
    err << "no positive grasps: " << e.what() << '\n';
    return kNoPositives;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
}

}  // namespace graspkit::cli
