// Acceptance run: one PASS/FAIL line per criterion.
// Usage: acceptance <path-to-graspkit-binary>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include <json.hpp>

#include "bridge_suite.hpp"
#include "grasp_suite.hpp"
#include "graspkit/config.hpp"
#include "graspkit/dataset.hpp"
#include "graspkit/features.hpp"
#include "graspkit/fixtures.hpp"
#include "graspkit/language.hpp"
#include "graspkit/metrics.hpp"

using namespace graspkit;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::vector<ObjectMesh> desk_objects() {
  std::vector<ObjectMesh> out;
  for (auto& [id, mesh] : desk_fixtures()) out.push_back({id, id, std::make_shared<const PartMesh>(std::move(mesh))});
  return out;
}

// The 50-record desk corpus: 5 meshes x 10 instances.
const std::vector<DatasetRecord>& desk_corpus() {
  static const auto records = [] {
    Config cfg;
    cfg.seed = 1;
    cfg.instances_per_object = 10;
    return generate_dataset(desk_objects(), cfg).records;
  }();
  return records;
}

Verdict oracle_agreement() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto suite = test::random_contact_suite(500, 1);
  std::size_t agree = 0, feasible = 0;
  for (const auto& c : suite) {
    const bool lp = test::lp_feasible(c);
    agree += lp == test::oracle_feasible(c);
    feasible += lp;
  }
  const double secs = seconds_since(t0);
  const double rate = static_cast<double>(agree) / static_cast<double>(suite.size());
  return {rate >= 0.99 && secs < 60.0,
          fmt("%zu/%zu agree (%.1f%%), %zu feasible, %.2f s", agree, suite.size(), 100 * rate, feasible, secs)};
}

Verdict analytic_cube() {
  const auto G = grasp_matrix<double>({-0.5, 0, 0}, {0.5, 0, 0}, Vec3::Zero());
  const auto task = gravity_task(1.0, 9.81);
  const std::array<Vec3, 2> normals = {Vec3(-1, 0, 0), Vec3(1, 0, 0)};
  auto at = [&](double eps) {
    return check_force_closure<double>(G, task, {ContactModel{0.5, eps, 8}, ContactModel{0.5, eps, 8}}, normals)
        .feasible;
  };
  const bool hi = at(100.0), lo = at(5.0);
  return {hi && !lo, fmt("eps=100 N %s, eps=5 N %s", hi ? "feasible" : "infeasible", lo ? "feasible" : "infeasible")};
}

Verdict cone_resolution() {
  const auto suite = test::random_contact_suite(500, 1);
  std::size_t flips = 0;
  for (const auto& c : suite) flips += test::lp_feasible(c, 8) != test::lp_feasible(c, 16);
  const double rate = static_cast<double>(flips) / static_cast<double>(suite.size());
  return {rate <= 0.01, fmt("%zu/%zu verdicts flip between 8 and 16 edges", flips, suite.size())};
}

Verdict affordance_integrity() {
  double worst_sum = 0, worst_diff = 0;
  const auto& records = desk_corpus();
  for (const auto& r : records) {
    std::map<PartId, double> prior;
    for (const auto& p : r.parts) prior[p.id] = p.grasp_prior;
    std::vector<long double> mass(r.points.size(), 0.0L);
    long double total = 0;
    for (std::size_t i = 0; i < r.points.size(); ++i) {
      for (std::size_t k = 0; k < r.positive_pairs.size(); ++k) {
        const auto& g = r.positive_grasps[k];
        for (int e = 0; e < 2; ++e) {
          long double w = prior.at(g.part[e]);
          if (r.quality_weighting) w /= 1.0L + g.min_force / (static_cast<long double>(r.mass) * r.label.gravity);
          const Vec3& c = r.points[r.positive_pairs[k][e]];
          long double d2 = 0;
          for (int a = 0; a < 3; ++a) d2 += std::pow(static_cast<long double>(r.points[i](a)) - c(a), 2);
          mass[i] += w * std::exp(-d2 / (2.0L * r.sigma * r.sigma));
        }
      }
      total += mass[i];
    }
    for (std::size_t i = 0; i < r.points.size(); ++i)
      worst_diff = std::max(worst_diff, std::abs(r.prob(i) - static_cast<double>(mass[i] / total)));
    worst_sum = std::max(worst_sum, std::abs(r.prob.sum() - 1.0));
  }
  return {records.size() == 50 && worst_sum <= 1e-9 && worst_diff <= 1e-12,
          fmt("%zu records, max |sum-1| %.2e, max |prob-oracle| %.2e", records.size(), worst_sum, worst_diff)};
}

Verdict metric_identities() {
  Rng rng(1);
  Eigen::VectorXd p(500);
  for (Eigen::Index i = 0; i < p.size(); ++i) p(i) = rng.uniform();
  p /= p.sum();
  const double self_kld = kld(p, p), self_sim = sim(p, p);
  const double constant_auc = auc_j(Eigen::VectorXd::Constant(500, 1.0 / 500), p);
  const Eigen::Vector2d gt(0.5, 0.5), pred(0.9, 0.1);
  const double wk = kld(pred, gt), ws = sim(pred, gt);
  const bool ok = std::abs(self_kld) <= 1e-9 && self_sim == 1.0 && std::abs(constant_auc - 0.5) <= 1e-9 &&
                  std::abs(wk - 0.5108) <= 1e-4 && std::abs(ws - 0.6) <= 1e-12;
  return {ok, fmt("kld(P,P)=%.1e sim(P,P)=%.15g auc_const=%.12f worked kld=%.6f sim=%.15g", self_kld, self_sim,
                  constant_auc, wk, ws)};
}

Verdict gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0;
  std::size_t params = 0;
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto g = test::width4_gradient_check(seed);
    worst = std::max(worst, g.max_rel_err);
    params = g.parameters;
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-4 && secs < 30.0,
          fmt("max rel err %.2e over %zu parameters x 3 seeds, %.2f s", worst, params, secs)};
}

Verdict loss_contracts() {
  const VectorX<double> e = VectorX<double>::Unit(6, 2);
  const double lg = loss_global<double>({e}, {e});

  MatrixX<double> Q(3, 2);
  Q << 0, 0, 0, 0, 5, 5;
  const PairBatch pairs{{{0, 1}, {0, 2}}, {1, 0}};
  const double le = loss_embedding<double>({Q}, {pairs}, {}).total;
  VectorX<double> perfect(2);
  perfect << 1.0, 0.0;
  const double lm = loss_match<double>({perfect}, {pairs});
  const double clamp = 2 * -std::log1p(-1e-12);

  const int K = 12;
  PairBatch half;
  for (int k = 0; k < K; ++k) {
    half.pairs.push_back({0, 1});
    half.match.push_back(k % 2);
  }
  const double lk = loss_match<double>({VectorX<double>::Constant(K, 0.5)}, {half});
  const bool ok = lg == 0.0 && le == 0.0 && lm >= 0.0 && lm <= clamp + 1e-15 && std::abs(lk - K * std::log(2.0)) <= 1e-9;
  return {ok, fmt("L_g=%g L_emb=%g L_match=%.1e (clamp %.1e), K=%d at p=0.5: %.12f vs %.12f", lg, le, lm, clamp, K, lk,
                  K * std::log(2.0))};
}

Verdict overfit() {
  const auto t0 = std::chrono::steady_clock::now();
  std::string detail;
  bool ok = true;
  for (std::uint64_t seed : {1, 2, 3}) {
    Config cfg;
    cfg.seed = seed;
    const auto objects = desk_objects();
    const BridgeDims dims;
    std::vector<TrainingExample<double>> examples;
    for (int k = 0; k < 10; ++k) {
      const auto& o = objects[static_cast<std::size_t>(k) % objects.size()];
      const auto id = make_instance_id(o.object_id, k / static_cast<int>(objects.size()));
      const auto rec = generate_instance(o.mesh, o.object_id, o.mesh_ref, id, derive_seed(seed, id), cfg).record;
      examples.push_back(training_example(rec, dims, cfg.train.points_per_instance, cfg.train.max_pairs, seed));
    }
    const auto result = train_overfit(examples, dims, cfg.loss, 2000, cfg.train.lr, seed);
    const double lg = result.log.back().global;
    ok = ok && lg < 0.05;
    detail += fmt("seed %llu L_g=%.4f; ", static_cast<unsigned long long>(seed), lg);
  }
  const double secs = seconds_since(t0);
  return {ok && secs < 300.0, detail + fmt("%.1f s", secs)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

bool same_tree(const fs::path& a, const fs::path& b) {
  std::size_t na = 0, nb = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    ++na;
    const auto other = b / fs::relative(e.path(), a);
    if (!fs::exists(other) || slurp(e.path()) != slurp(other)) return false;
  }
  for (const auto& e : fs::recursive_directory_iterator(b)) nb += e.is_regular_file();
  return na == nb && na > 0;
}

int shell(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Verdict end_to_end(const std::string& binary) {
  if (binary.empty() || !fs::exists(binary)) return {false, "graspkit binary not given"};
  const fs::path root = fs::temp_directory_path() / "graspkit-acceptance";
  fs::remove_all(root);
  fs::create_directories(root);
  const std::string config = std::string(GRASPKIT_SOURCE_DIR) + "/configs/desk.toml";
  auto gen = [&](const std::string& name, int workers) {
    return shell("'" + binary + "' generate --config '" + config + "' --seed 1 --set instances_per_object=10 --workers " +
                 std::to_string(workers) + " --out '" + (root / name).string() + "' > '" +
                 (root / (name + ".out")).string() + "'");
  };
  const auto t0 = std::chrono::steady_clock::now();
  const int g1 = gen("w1", 1);
  const double secs = seconds_since(t0);
  const int g2 = gen("w2", 2);
  const int g3 = gen("w2b", 2);
  if (g1 || g2 || g3) return {false, fmt("generate exit codes %d %d %d", g1, g2, g3)};

  const int v = shell("'" + binary + "' verify --dataset '" + (root / "w1").string() + "' > '" +
                      (root / "verify.out").string() + "'");
  const auto report = json::parse(slurp(root / "verify.out"));
  const auto records = report.at("records").get<std::size_t>();
  const auto valid = report.at("valid").get<std::size_t>();
  const bool workers_same = same_tree(root / "w1", root / "w2");
  const bool repeat_same = same_tree(root / "w2", root / "w2b");
  fs::remove_all(root);
  return {records == 50 && valid == records && v == 0 && workers_same && repeat_same && secs < 300.0,
          fmt("%zu records in %.2f s, verify %zu/%zu valid (%llu pairs, exit %d), workers 1 vs 2 %s, repeat %s",
              records, secs, valid, records, report.at("positive_pairs_verified").get<unsigned long long>(), v,
              workers_same ? "identical" : "DIFFER", repeat_same ? "identical" : "DIFFER")};
}

Verdict language() {
  std::size_t checked = 0, bad = 0;
  std::string first;
  for (const auto& r : desk_corpus()) {
    const auto msg = check_summary({r.summary, r.emphasized}, instance_from_record(r), r.language);
    ++checked;
    if (!msg.empty()) {
      ++bad;
      if (first.empty()) first = r.instance_id + ": " + msg;
    }
  }
  const auto& table = builtin_materials();
  InstanceSpec faucet;
  faucet.object_id = "faucet";
  faucet.seed = 1;
  faucet.mesh = std::make_shared<PartMesh>(faucet_fixture());
  faucet.assignments = {{0, find_material(table, "plastic"), 0.7},
                        {1, find_material(table, "brass"), 0.7},
                        {2, find_material(table, "fiberglass"), 0.7}};
  const auto s = summarize_instance(faucet);
  const bool faucet_ok = s.text.find("brass with the highest density") != std::string::npos &&
                         s.text.find("fiberglass with the highest friction") != std::string::npos &&
                         check_summary(s, faucet).empty();
  return {bad == 0 && checked == 50 && faucet_ok,
          fmt("%zu/%zu desk summaries consistent%s; faucet: \"%s\"", checked - bad, checked,
              first.empty() ? "" : (" (first problem " + first + ")").c_str(), s.text.c_str())};
}

Verdict physical_sensitivity() {
  Config cfg;
  cfg.quality_weighting = true;
  const auto clock = std::make_shared<const PartMesh>(clock_fixture());
  const auto& table = builtin_materials();
  auto argmax_part = [&](Fragility base) {
    InstanceOverrides o;
    Material rubber = find_material(table, "rubber");
    rubber.fragility = base;
    o.materials = {{0, rubber}, {1, find_material(table, "brass")}};
    const auto r = generate_instance(clock, "clock", "clock", "clock-0000", 7, cfg, o).record;
    Eigen::Index best = 0;
    r.prob.maxCoeff(&best);
    return r.point_part[static_cast<std::size_t>(best)];
  };
  const PartId tough = argmax_part(Fragility::Tough), fragile = argmax_part(Fragility::Fragile);
  const auto names = clock_fixture().part_names;
  return {tough != fragile, "tough base: argmax on " + names.at(tough) + ", fragile base: argmax on " + names.at(fragile)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::string binary = argc > 1 ? argv[1] : "";
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"force-closure oracle agreement", oracle_agreement},
      {"analytic cube grasp", analytic_cube},
      {"cone-resolution stability", cone_resolution},
      {"affordance integrity", affordance_integrity},
      {"metric identities", metric_identities},
      {"gradient verification", gradients},
      {"loss contracts", loss_contracts},
      {"overfit capacity", overfit},
      {"end-to-end desk dataset", [&] { return end_to_end(binary); }},
      {"language consistency", language},
      {"physical sensitivity", physical_sensitivity},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += !v.pass;
    std::cout << (v.pass ? "PASS" : "FAIL") << " " << i + 1 << " " << criteria[i].first << ": " << v.detail
              << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
