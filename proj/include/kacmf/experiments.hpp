#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "kacmf/bounds.hpp"
#include "kacmf/config.hpp"
#include "kacmf/errors.hpp"
#include "kacmf/fourier_oracle.hpp"
#include "kacmf/particles.hpp"
#include "kacmf/sobolev.hpp"
#include "kacmf/wild.hpp"

namespace kacmf {

namespace stream_kind {
// Stream tags: one namespace per consumer so replicas, references and
// bootstrap draws never share randomness.
inline constexpr std::uint64_t kWildReference = 100;  // +checkpoint index
inline constexpr std::uint64_t kParticleReference = 200;
inline constexpr std::uint64_t kReplica = 2;
inline constexpr std::uint64_t kBootstrap = 3;
inline constexpr std::uint64_t kMoments = 4;
}  // namespace stream_kind

inline std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

struct ConvergeRow {
  std::size_t N = 0;
  std::size_t replica = 0;
  double checkpoint_time = 0.0;
  double distance = 0.0;
  std::uint64_t collisions = 0;
  double K = 0.0;
  double Ktilde = 0.0;
};

struct NSummary {
  std::size_t N = 0;
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
};

struct RunSummary {
  std::vector<ConvergeRow> rows;
  std::vector<NSummary> per_n;  // statistics at the final checkpoint
  bool slope_valid = false;
  double slope = 0.0;
  double slope_ci_low = 0.0;
  double slope_ci_high = 0.0;
  std::vector<double> residuals;
  std::uint64_t wild_depth_exceeded = 0;
};

struct TailCheckRow {
  double epsilon = 0.0;
  double lambda_star = 0.0;
  double theoretical_bound = 1.0;
  double empirical_freq = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  bool dominated = true;
};

namespace exp_detail {

inline double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * (static_cast<double>(sorted.size()) - 1.0);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

inline double median_of(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  return quantile_sorted(values, 0.5);
}

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
};

inline SlopeFit least_squares(const std::vector<double>& x,
                              const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  SlopeFit f;
  const double denom = n * sxx - sx * sx;
  f.slope = (n * sxy - sx * sy) / denom;
  f.intercept = (sy - f.slope * sx) / n;
  return f;
}

// References for every checkpoint time, with cached self sums.
struct ReferenceSet {
  std::vector<EmpiricalCloud> clouds;  // one per checkpoint
  std::vector<AtomicSignedMeasure> measures;  // kept only for CSV export
  std::uint64_t depth_exceeded = 0;
};

inline ReferenceSet build_references(const ExperimentConfig& cfg, int threads,
                                     bool keep_measures = false) {
  ReferenceSet refs;
  const AngularKernel kernel = cfg.make_kernel();
  if (cfg.wild_samples > 0) {
    WildStats stats;
    for (std::size_t ci = 0; ci < cfg.checkpoints.size(); ++ci) {
      WildTreeSpec spec{kernel, cfg.initial, cfg.checkpoints[ci], 64};
      AtomicSignedMeasure ref =
          reference_measure(spec, cfg.wild_samples, cfg.seed,
                            stream_kind::kWildReference + ci, &stats);
      refs.clouds.push_back(EmpiricalCloud::from_rowmajor(
          cfg.d, ref.coords.data(), ref.size()));
      if (keep_measures) refs.measures.push_back(std::move(ref));
    }
    refs.depth_exceeded = stats.depth_exceeded;
  } else if (cfg.particle_ref_n > 0) {
    Ensemble e = sample_initial(cfg.initial, cfg.particle_ref_n, cfg.seed,
                                stream_tag(stream_kind::kParticleReference));
    const TrajectoryRecord rec = simulate(e, kernel, cfg.T, cfg.checkpoints);
    for (const auto& snap : rec.snapshots) {
      refs.clouds.push_back(EmpiricalCloud::from_rowmajor(
          cfg.d, snap.velocities.data(), cfg.particle_ref_n));
      if (keep_measures) {
        AtomicSignedMeasure m(cfg.d);
        m.coords = snap.velocities;
        m.weights.assign(cfg.particle_ref_n,
                         1.0 / static_cast<double>(cfg.particle_ref_n));
        refs.measures.push_back(std::move(m));
      }
    }
  } else {
    throw config_error(
        "reference: set reference.wild_samples or reference.particle_N");
  }
  const double two_r = 2.0 * cfg.r;
  for (auto& cloud : refs.clouds) cloud.ensure_self_sum(two_r, threads);
  return refs;
}

inline InitialFluctuation make_fluctuation(const ExperimentConfig& cfg,
                                           const SobolevIndex& idx) {
  InitialFluctuation fl;
  fl.a = cfg.a;
  if (cfg.initial.kind == InitialLaw::Kind::Discrete) {
    fl.sigma2 = sigma2(cfg.initial, idx);
    fl.A = bigA(cfg.initial, cfg.a, idx);
  } else {
    Philox rng = Philox::stream(cfg.seed, stream_tag(stream_kind::kMoments));
    fl.sigma2 = sigma2_mc(cfg.initial, idx, 200000, rng).value;
    fl.A = bigA_mc(cfg.initial, cfg.a, idx, 20000, 400, rng).value;
  }
  return fl;
}

}  // namespace exp_detail

// ---------------------------------------------------------------------------
// bound-report
// ---------------------------------------------------------------------------

struct BoundReportFiles {
  std::string constants_path;
  std::string csv_path;
};

inline BoundReportFiles run_bound_report(const ExperimentConfig& cfg,
                                         int threads = 0) {
  (void)threads;
  if (cfg.N_list.empty())
    throw config_error("bound-report needs run.N");
  if (cfg.epsilon_list.empty())
    throw config_error("bound-report needs bound.epsilon");
  const SobolevIndex idx = SobolevIndex::make(cfg.d, cfg.r);
  const AngularKernel kernel = cfg.make_kernel();
  const ModelConstants consts =
      ModelConstants::make(idx, kernel, cfg.k1, cfg.strict_cubic);
  const InitialFluctuation fl = exp_detail::make_fluctuation(cfg, idx);
  const std::size_t N = cfg.N_list.front();

  std::filesystem::create_directories(cfg.out_dir);
  BoundReportFiles files;
  files.constants_path = cfg.out_dir + "/constants.txt";
  files.csv_path = cfg.out_dir + "/bound_report.csv";

  {
    std::ofstream out(files.constants_path);
    out << "d = " << cfg.d << "\n";
    out << "r = " << fmt_double(cfg.r) << "\n";
    out << "s = " << fmt_double(idx.s) << "\n";
    out << "kernel = " << kernel.name << "\n";
    out << "C_r = " << fmt_double(idx.dipole) << "\n";
    out << "c_sd = " << fmt_double(idx.c_sd) << "\n";
    out << "kappa = " << fmt_double(consts.kappa) << "\n";
    out << "k1 = " << fmt_double(cfg.k1) << "\n";
    out << "a = " << fmt_double(cfg.a) << "\n";
    out << "ell = " << fmt_double(consts.ell) << "\n";
    out << "omega = " << fmt_double(consts.omega) << "\n";
    out << "sigma2 = " << fmt_double(fl.sigma2) << "\n";
    out << "A = " << fmt_double(fl.A) << "\n";
    out << "N = " << N << "\n";
    out << "T = " << fmt_double(cfg.T) << "\n";
  }

  std::ofstream csv(files.csv_path);
  csv << "lambda,epsilon,N,T,ln_bound,term_static,term_quadratic,term_cubic,"
         "term_dynamic,valid,tail_probability\n";
  auto emit = [&](double lambda, double eps) {
    const BoundReport rep = synthetic_bound({N, cfg.T, lambda}, consts, fl);
    csv << fmt_double(lambda) << ',' << fmt_double(eps) << ',' << N << ','
        << fmt_double(cfg.T) << ',' << fmt_double(rep.total) << ','
        << fmt_double(rep.term_static) << ',' << fmt_double(rep.term_quadratic)
        << ',' << fmt_double(rep.term_cubic) << ','
        << fmt_double(rep.term_dynamic) << ',' << (rep.valid ? 1 : 0) << ','
        << fmt_double(tail_probability(rep.total, lambda, eps)) << "\n";
  };
  for (double eps : cfg.epsilon_list) {
    if (cfg.lambda_auto) {
      const OptimizedTail opt = optimize_lambda(N, cfg.T, eps, consts, fl);
      emit(opt.lambda_star, eps);
    } else {
      for (double lambda : cfg.lambda_list) emit(lambda, eps);
    }
  }
  return files;
}

// ---------------------------------------------------------------------------
// converge
// ---------------------------------------------------------------------------

inline RunSummary run_convergence_experiment(const ExperimentConfig& cfg,
                                             int threads = 0,
                                             bool write_files = true) {
  if (cfg.N_list.empty()) throw config_error("converge needs run.N");
  if (cfg.checkpoints.empty()) throw config_error("converge needs checkpoints");
  const SobolevIndex idx = SobolevIndex::make(cfg.d, cfg.r);
  const AngularKernel kernel = cfg.make_kernel();
  const double two_r = 2.0 * cfg.r;

  const bool exporting = write_files && cfg.export_reference;
  exp_detail::ReferenceSet refs =
      exp_detail::build_references(cfg, threads, exporting);
  if (exporting) {
    std::filesystem::create_directories(cfg.out_dir);
    for (std::size_t ci = 0; ci < refs.measures.size(); ++ci) {
      std::ofstream out(cfg.out_dir + "/reference_c" + std::to_string(ci) +
                        ".csv");
      write_measure_csv(out, refs.measures[ci]);
    }
    refs.measures.clear();
  }

  RunSummary summary;
  summary.wild_depth_exceeded = refs.depth_exceeded;
  std::vector<std::vector<double>> final_distances(cfg.N_list.size());

  for (std::size_t ni = 0; ni < cfg.N_list.size(); ++ni) {
    const std::size_t N = cfg.N_list[ni];
    for (std::size_t rep = 0; rep < cfg.replicas; ++rep) {
      Ensemble e = sample_initial(cfg.initial, N, cfg.seed,
                                  stream_tag(stream_kind::kReplica, ni, rep));
      const TrajectoryRecord rec = simulate(e, kernel, cfg.T, cfg.checkpoints);
      if (write_files && cfg.export_snapshots && rep == 0) {
        std::filesystem::create_directories(cfg.out_dir);
        for (std::size_t ci = 0; ci < cfg.checkpoints.size(); ++ci) {
          std::ofstream out(cfg.out_dir + "/snapshot_N" + std::to_string(N) +
                            "_c" + std::to_string(ci) + ".csv");
          write_snapshot_csv(out, rec.snapshots[ci], cfg.d);
        }
      }
      for (std::size_t ci = 0; ci < cfg.checkpoints.size(); ++ci) {
        const CheckpointSnapshot& snap = rec.snapshots[ci];
        EmpiricalCloud cloud =
            EmpiricalCloud::from_rowmajor(cfg.d, snap.velocities.data(), N);
        cloud.ensure_self_sum(two_r, threads);
        const double dist =
            empirical_distance(cloud, refs.clouds[ci], idx, threads);
        ConvergeRow row;
        row.N = N;
        row.replica = rep;
        row.checkpoint_time = snap.time;
        row.distance = dist;
        row.collisions = snap.collisions;
        row.K = snap.energy;
        row.Ktilde = snap.internal;
        summary.rows.push_back(row);
        if (ci + 1 == cfg.checkpoints.size())
          final_distances[ni].push_back(dist);
      }
      if ((rep + 1) % 20 == 0)
        std::cerr << "converge: N=" << N << " replica " << (rep + 1) << "/"
                  << cfg.replicas << "\n";
    }
  }

  for (std::size_t ni = 0; ni < cfg.N_list.size(); ++ni) {
    std::vector<double> sorted = final_distances[ni];
    std::sort(sorted.begin(), sorted.end());
    NSummary s;
    s.N = cfg.N_list[ni];
    s.median = exp_detail::quantile_sorted(sorted, 0.5);
    s.q25 = exp_detail::quantile_sorted(sorted, 0.25);
    s.q75 = exp_detail::quantile_sorted(sorted, 0.75);
    summary.per_n.push_back(s);
  }

  if (cfg.N_list.size() >= 2) {
    summary.slope_valid = true;
    std::vector<double> lx, ly;
    for (const NSummary& s : summary.per_n) {
      lx.push_back(std::log(static_cast<double>(s.N)));
      ly.push_back(std::log(s.median));
    }
    const exp_detail::SlopeFit fit = exp_detail::least_squares(lx, ly);
    summary.slope = fit.slope;
    for (std::size_t i = 0; i < lx.size(); ++i)
      summary.residuals.push_back(ly[i] - (fit.intercept + fit.slope * lx[i]));
    // bootstrap over replicas within each N
    Philox boot = Philox::stream(cfg.seed, stream_tag(stream_kind::kBootstrap));
    std::vector<double> slopes;
    const int kResamples = 1000;
    slopes.reserve(kResamples);
    for (int b = 0; b < kResamples; ++b) {
      std::vector<double> by(cfg.N_list.size());
      for (std::size_t ni = 0; ni < cfg.N_list.size(); ++ni) {
        const auto& pool = final_distances[ni];
        std::vector<double> sample(pool.size());
        for (auto& v : sample)
          v = pool[boot.uniform_below(pool.size())];
        by[ni] = std::log(exp_detail::median_of(std::move(sample)));
      }
      slopes.push_back(exp_detail::least_squares(lx, by).slope);
    }
    std::sort(slopes.begin(), slopes.end());
    summary.slope_ci_low = exp_detail::quantile_sorted(slopes, 0.025);
    summary.slope_ci_high = exp_detail::quantile_sorted(slopes, 0.975);
  }

  if (write_files) {
    std::filesystem::create_directories(cfg.out_dir);
    std::ofstream csv(cfg.out_dir + "/converge.csv");
    csv << "N,replica,checkpoint_time,distance,collisions,K,Ktilde\n";
    for (const ConvergeRow& row : summary.rows)
      csv << row.N << ',' << row.replica << ','
          << fmt_double(row.checkpoint_time) << ',' << fmt_double(row.distance)
          << ',' << row.collisions << ',' << fmt_double(row.K) << ','
          << fmt_double(row.Ktilde) << "\n";
    std::ofstream txt(cfg.out_dir + "/converge_summary.txt");
    for (const NSummary& s : summary.per_n) {
      txt << "N = " << s.N << " median = " << fmt_double(s.median);
      if (cfg.replicas >= 2)
        txt << " q25 = " << fmt_double(s.q25) << " q75 = " << fmt_double(s.q75);
      txt << "\n";
    }
    if (summary.slope_valid) {
      txt << "slope = " << fmt_double(summary.slope) << "\n";
      txt << "slope_ci_low = " << fmt_double(summary.slope_ci_low) << "\n";
      txt << "slope_ci_high = " << fmt_double(summary.slope_ci_high) << "\n";
      txt << "residuals =";
      for (double r : summary.residuals) txt << ' ' << fmt_double(r);
      txt << "\n";
    }
    txt << "wild_depth_exceeded = " << summary.wild_depth_exceeded << "\n";
  }
  return summary;
}

// ---------------------------------------------------------------------------
// tail-check
// ---------------------------------------------------------------------------

inline std::vector<TailCheckRow> run_bound_vs_empirical(
    const ExperimentConfig& cfg, int threads = 0, bool write_files = true) {
  if (cfg.N_list.empty()) throw config_error("tail-check needs run.N");
  if (cfg.epsilon_list.empty()) throw config_error("tail-check needs bound.epsilon");
  if (cfg.replicas < 1) throw config_error("tail-check needs run.replicas >= 1");
  const SobolevIndex idx = SobolevIndex::make(cfg.d, cfg.r);
  const AngularKernel kernel = cfg.make_kernel();
  const ModelConstants consts =
      ModelConstants::make(idx, kernel, cfg.k1, cfg.strict_cubic);
  const InitialFluctuation fl = exp_detail::make_fluctuation(cfg, idx);
  const std::size_t N = cfg.N_list.front();
  const double two_r = 2.0 * cfg.r;

  // distances at the final checkpoint only
  ExperimentConfig run_cfg = cfg;
  run_cfg.checkpoints = {cfg.T};
  exp_detail::ReferenceSet refs = exp_detail::build_references(run_cfg, threads);

  std::vector<double> distances;
  distances.reserve(cfg.replicas);
  for (std::size_t rep = 0; rep < cfg.replicas; ++rep) {
    Ensemble e = sample_initial(cfg.initial, N, cfg.seed,
                                stream_tag(stream_kind::kReplica, 0, rep));
    const TrajectoryRecord rec = simulate(e, kernel, cfg.T, run_cfg.checkpoints);
    EmpiricalCloud cloud = EmpiricalCloud::from_rowmajor(
        cfg.d, rec.snapshots.back().velocities.data(), N);
    cloud.ensure_self_sum(two_r, threads);
    distances.push_back(
        empirical_distance(cloud, refs.clouds.back(), idx, threads));
    if ((rep + 1) % 50 == 0)
      std::cerr << "tail-check: replica " << (rep + 1) << "/" << cfg.replicas
                << "\n";
  }

  std::vector<TailCheckRow> rows;
  const double M = static_cast<double>(cfg.replicas);
  for (double eps : cfg.epsilon_list) {
    const OptimizedTail opt = optimize_lambda(N, cfg.T, eps, consts, fl);
    std::size_t hits = 0;
    for (double d : distances)
      if (d >= eps) ++hits;
    const double freq = static_cast<double>(hits) / M;
    const double se = std::sqrt(std::max(0.0, freq * (1.0 - freq) / M));
    TailCheckRow row;
    row.epsilon = eps;
    row.lambda_star = opt.lambda_star;
    row.theoretical_bound = opt.probability;
    row.empirical_freq = freq;
    row.ci_low = std::max(0.0, freq - 3.0 * se);
    row.ci_high = std::min(1.0, freq + 3.0 * se);
    row.dominated = freq <= opt.probability + 3.0 * se;
    rows.push_back(row);
  }

  if (write_files) {
    std::filesystem::create_directories(cfg.out_dir);
    std::ofstream csv(cfg.out_dir + "/tail_check.csv");
    csv << "epsilon,lambda_star,theoretical_bound,empirical_freq,ci_low,"
           "ci_high,dominated\n";
    for (const TailCheckRow& row : rows)
      csv << fmt_double(row.epsilon) << ',' << fmt_double(row.lambda_star)
          << ',' << fmt_double(row.theoretical_bound) << ','
          << fmt_double(row.empirical_freq) << ',' << fmt_double(row.ci_low)
          << ',' << fmt_double(row.ci_high) << ',' << (row.dominated ? 1 : 0)
          << "\n";
  }
  return rows;
}

}  // namespace kacmf
