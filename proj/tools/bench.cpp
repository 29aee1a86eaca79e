#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "remask/datagen.hpp"
#include "remask/model.hpp"
#include "remask/reflection.hpp"
#include "remask/training.hpp"

using namespace remask;

namespace {

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
      .count();
}

void row(const char* name, double serial_ms, double parallel_ms, double max_diff) {
  std::printf("%-18s %10.1f ms %10.1f ms %8.2fx   max|diff| %.3e\n", name, serial_ms,
              parallel_ms, serial_ms / parallel_ms, max_diff);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"serial vs OpenMP timings for the hot paths"};
  int n = 2000;
  int k = 8;
  std::uint64_t seed = 7;
  app.add_option("--n", n, "graphs to generate");
  app.add_option("--k", k, "reflection depth");
  app.add_option("--seed", seed, "seed");
  CLI11_PARSE(app, argc, argv);

  datagen::SpmotifConfig gc;
  gc.num_train = n;
  gc.num_valid = 0;
  gc.num_test = 0;
  gc.bias = 0.9;
  gc.seed = seed;

  auto t0 = std::chrono::steady_clock::now();
  const Dataset ds = datagen::generate_spmotif_serial(gc);
  const double gen_serial = ms_since(t0);
  t0 = std::chrono::steady_clock::now();
  const Dataset dp = datagen::generate_spmotif(gc);
  const double gen_parallel = ms_since(t0);
  row("generate", gen_serial, gen_parallel, ds == dp ? 0.0 : 1.0);

  model::HyperParams hp;
  const model::ModelState s = model::ModelState::init(hp, seed);
  training::TrainConfig tc;
  std::vector<int> idx(ds.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);

  std::vector<double> grad_s(s.params.size(), 0.0), grad_p(s.params.size(), 0.0);
  t0 = std::chrono::steady_clock::now();
  training::gsat_batch_serial(ds, idx, s, tc, seed, &grad_s);
  const double gsat_serial = ms_since(t0);
  t0 = std::chrono::steady_clock::now();
  training::gsat_batch(ds, idx, s, tc, seed, &grad_p);
  const double gsat_parallel = ms_since(t0);
  double gdiff = 0.0;
  for (std::size_t i = 0; i < grad_s.size(); ++i)
    gdiff = std::max(gdiff, std::abs(grad_s[i] - grad_p[i]));
  row("gsat_batch", gsat_serial, gsat_parallel, gdiff);

  t0 = std::chrono::steady_clock::now();
  const auto rs = reflection::reflect_batch_serial(ds, idx, s, k, UpdateMode::accumulate);
  const double refl_serial = ms_since(t0);
  t0 = std::chrono::steady_clock::now();
  const auto rp = reflection::reflect_batch(ds, idx, s, k, UpdateMode::accumulate);
  const double refl_parallel = ms_since(t0);
  double rdiff = 0.0;
  for (std::size_t i = 0; i < rs.size(); ++i)
    for (int t = 0; t <= k; ++t)
      for (std::size_t e = 0; e < rs[i].seq.masks[t].scores.size(); ++e)
        rdiff = std::max(rdiff, std::abs(rs[i].seq.masks[t].scores[e] -
                                         rp[i].seq.masks[t].scores[e]));
  row("reflect_batch", refl_serial, refl_parallel, rdiff);

  std::vector<double> fgrad_s(s.params.size(), 0.0), fgrad_p(s.params.size(), 0.0);
  training::TrainConfig fc = tc;
  fc.k = 2;
  t0 = std::chrono::steady_clock::now();
  training::finetune_batch_serial(ds, idx, s, fc, &fgrad_s);
  const double ft_serial = ms_since(t0);
  t0 = std::chrono::steady_clock::now();
  training::finetune_batch(ds, idx, s, fc, &fgrad_p);
  const double ft_parallel = ms_since(t0);
  double fdiff = 0.0;
  for (std::size_t i = 0; i < fgrad_s.size(); ++i)
    fdiff = std::max(fdiff, std::abs(fgrad_s[i] - fgrad_p[i]));
  row("finetune_batch", ft_serial, ft_parallel, fdiff);

  return 0;
}
