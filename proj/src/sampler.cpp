#include "qht/sampler.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "qht/error.hpp"
#include "qht/parallel.hpp"

namespace qht {
namespace {

constexpr double kGridStep = 0.01;
constexpr int kPhiGrid = 65;
constexpr long kMaxAttempts = 1'000'000;
constexpr std::uint32_t kPhaseNoiseDomain = 0;
constexpr std::uint32_t kProposalDomain = 1;
constexpr std::size_t kChunk = 1024;

}  // namespace

QuadratureSampler::QuadratureSampler(const DensityMatrix& rho, std::string state_id)
    : rho_(rho), state_id_(std::move(state_id)) {
  if (rho.raw()) throw DomainError("cannot sample from a raw (unphysical) estimate");
  if (!(rho.trace_deficit() < DensityMatrix::kTraceTolerance)) {
    throw DomainError("state trace deficit must be below 1e-6 for sampling");
  }
  const double x_max = std::sqrt(2.0 * rho.dim() + 1.0) + 8.0;
  const int steps = static_cast<int>(std::ceil(x_max / kGridStep));

  std::vector<QuadratureProfile> profiles;
  profiles.reserve(2 * steps + 1);
  for (int i = -steps; i <= steps; ++i) profiles.emplace_back(rho, i * kGridStep);

  std::vector<double> phis(kPhiGrid);
  for (int k = 0; k < kPhiGrid; ++k) phis[k] = std::numbers::pi * k / (kPhiGrid - 1);

  double second_moment = 0.0;
  for (double phi : phis) {
    double m2 = 0.0;
    for (int i = -steps; i <= steps; ++i) {
      const double x = i * kGridStep;
      m2 += x * x * std::max(0.0, profiles[i + steps](phi)) * kGridStep;
    }
    second_moment = std::max(second_moment, m2);
  }
  sigma_ = std::sqrt(std::max(1.0, second_moment));

  double ratio = 0.0;
  for (int i = -steps; i <= steps; ++i) {
    const double x = i * kGridStep;
    const double g = std::exp(-0.5 * x * x / (sigma_ * sigma_)) /
                     (sigma_ * std::sqrt(2.0 * std::numbers::pi));
    for (double phi : phis) ratio = std::max(ratio, profiles[i + steps](phi) / g);
  }
  c_ = kSafetyMargin * ratio;
  if (!(acceptance_rate() >= kMinAcceptance)) {
    std::ostringstream msg;
    msg << "rejection envelope unusable for state '" << state_id_ << "': acceptance rate "
        << acceptance_rate() << " < " << kMinAcceptance;
    throw EnvelopeError(msg.str());
  }
}

double QuadratureSampler::envelope(double x) const {
  return c_ * std::exp(-0.5 * x * x / (sigma_ * sigma_)) /
         (sigma_ * std::sqrt(2.0 * std::numbers::pi));
}

double QuadratureSampler::draw(double phi, rng::Stream& stream) const {
  for (long attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const double x = sigma_ * stream.normal();
    const double u = stream.uniform();
    const double g = envelope(x);
    const double p = std::max(0.0, QuadratureProfile(rho_, x)(phi));
    if (p > g) {
      std::ostringstream msg;
      msg << "rejection envelope violated for state '" << state_id_ << "' at x=" << x
          << ", phi=" << phi;
      throw EnvelopeError(msg.str());
    }
    if (u * g <= p) return x;
  }
  throw EnvelopeError("rejection sampler exceeded the attempt limit for state '" + state_id_ +
                      "'");
}

Dataset sample(const DensityMatrix& rho, const NoiseModel& noise, std::size_t n,
               std::uint64_t seed, const std::string& source_state_id,
               const SampleOptions& options) {
  if (n == 0) throw DomainError("sample size n must be positive");
  if (!(noise.eta > 0.0 && noise.eta <= 1.0)) throw DomainError("eta must lie in (0, 1]");
  const QuadratureSampler sampler(rho, source_state_id);

  Dataset data;
  data.eta = noise.eta;
  data.seed = seed;
  data.source_state_id = source_state_id;
  data.records.resize(n);
  if (options.keep_latent) data.latent.resize(n);

  const double root_eta = std::sqrt(noise.eta);
  const double sd = noise.noise_sd();
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  parallel_for(chunks, [&](std::size_t c) {
    const std::size_t end = std::min(n, (c + 1) * kChunk);
    for (std::size_t l = c * kChunk; l < end; ++l) {
      rng::Stream base(seed, l, kPhaseNoiseDomain);
      rng::Stream proposals(seed, l, kProposalDomain);
      const double phi = std::numbers::pi * base.uniform();
      const double xi = base.normal();
      const double x = sampler.draw(phi, proposals);
      data.records[l] = {root_eta * x + sd * xi, phi};
      if (options.keep_latent) data.latent[l] = x;
    }
  });
  return data;
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path) {
  auto p = csv_path;
  p.replace_extension(".json");
  return p;
}

void write_dataset(const std::filesystem::path& csv_path, const Dataset& data) {
  std::FILE* f = std::fopen(csv_path.string().c_str(), "w");
  if (!f) throw IoError("cannot write " + csv_path.string());
  std::fputs("y,phi\n", f);
  for (const Record& r : data.records) std::fprintf(f, "%.17g,%.17g\n", r.y, r.phi);
  std::fclose(f);

  nlohmann::json side = {{"eta", data.eta},
                         {"seed", data.seed},
                         {"n", data.records.size()},
                         {"source_state_id", data.source_state_id}};
  std::ofstream out(sidecar_path(csv_path));
  if (!out) throw IoError("cannot write sidecar for " + csv_path.string());
  out << side.dump(2) << '\n';
}

Dataset read_dataset(const std::filesystem::path& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw IoError("cannot read dataset " + csv_path.string());
  std::string line;
  if (!std::getline(in, line) || line != "y,phi") {
    throw IoError("dataset " + csv_path.string() + " must start with header 'y,phi'");
  }
  Dataset data;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw IoError("dataset line " + std::to_string(line_no) + " has no comma");
    }
    char* end = nullptr;
    Record r;
    r.y = std::strtod(line.c_str(), &end);
    r.phi = std::strtod(line.c_str() + comma + 1, &end);
    if (!std::isfinite(r.y) || !(r.phi >= 0.0 && r.phi <= std::numbers::pi)) {
      throw IoError("dataset line " + std::to_string(line_no) + " is out of range");
    }
    data.records.push_back(r);
  }

  std::ifstream side_in(sidecar_path(csv_path));
  if (!side_in) throw IoError("missing sidecar " + sidecar_path(csv_path).string());
  try {
    nlohmann::json side;
    side_in >> side;
    data.eta = side.at("eta").get<double>();
    data.seed = side.at("seed").get<std::uint64_t>();
    data.source_state_id = side.value("source_state_id", std::string());
    if (side.at("n").get<std::size_t>() != data.records.size()) {
      throw IoError("sidecar n does not match the number of records");
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed dataset sidecar: ") + e.what());
  }
  if (!(data.eta > 0.0 && data.eta <= 1.0)) throw IoError("sidecar eta must lie in (0, 1]");
  return data;
}

}  // namespace qht
