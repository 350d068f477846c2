#include "oracles.hpp"

#include "pinn/checkpoint.hpp"
#include "pinn/errors.hpp"
#include "pinn/network.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

using namespace pinn;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "pinn_forge_unit";
  std::filesystem::create_directories(dir);
  return dir / name;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Checkpoint sample_checkpoint() {
  Checkpoint chk;
  chk.params = init_network({1, 2, 1}, 9);
  chk.params.flat[2] = 0.1;  // not exactly representable
  chk.params.flat[3] = -1.0 / 3.0;
  chk.meta = {"shm", 20.0, "hybrid", 6000, 9.87654321e-4, 9, 1};
  return chk;
}

}  // namespace

TEST_SUITE("network") {

TEST_CASE("parameter count of the default architecture") {
  const std::vector<int> dims{1, 64, 64, 64, 64, 1};
  CHECK(parameter_count(dims) == 12673);
  CHECK(init_network(dims, 0).flat.size() == 12673);
  CHECK(parameter_count(std::vector<int>{2, 64, 64, 64, 64, 1}) == 12737);
}

TEST_CASE("single weight initialisation is bounded") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const NetworkParams net = init_network({1, 1}, seed);
    REQUIRE(net.flat.size() == 2);
    CHECK(std::abs(net.flat[0]) <= std::sqrt(3.0));
    CHECK(net.flat[1] == 0.0);
  }
}

TEST_CASE("glorot bounds and zero biases per layer") {
  const NetworkParams net = init_network({2, 7, 5, 1}, 4);
  for (const LayerSlice& s : layer_slices(net.layer_dims)) {
    const double bound = std::sqrt(6.0 / (s.rows + s.cols));
    for (int i = 0; i < s.rows * s.cols; ++i) {
      CHECK(std::abs(net.flat[static_cast<Eigen::Index>(s.weight_offset + i)]) <= bound);
    }
    for (int i = 0; i < s.rows; ++i) CHECK(net.flat[static_cast<Eigen::Index>(s.bias_offset + i)] == 0.0);
  }
}

TEST_CASE("initialisation is deterministic per seed") {
  CHECK(init_network({1, 8, 1}, 3) == init_network({1, 8, 1}, 3));
  CHECK_FALSE(init_network({1, 8, 1}, 3) == init_network({1, 8, 1}, 4));
}

TEST_CASE("invalid dims") {
  CHECK_THROWS_AS(init_network({}, 0), UsageError);
  CHECK_THROWS_AS(init_network({3}, 0), UsageError);
  CHECK_THROWS_AS(init_network({1, 0, 1}, 0), UsageError);
  CHECK_THROWS_AS(init_network({1, -2, 1}, 0), UsageError);
}

TEST_CASE("flat layout is row-major weights then bias") {
  const auto s = layer_slices(std::vector<int>{2, 3, 1});
  REQUIRE(s.size() == 2);
  CHECK(s[0].weight_offset == 0);
  CHECK(s[0].bias_offset == 6);
  CHECK(s[1].weight_offset == 9);
  CHECK(s[1].bias_offset == 12);
}

TEST_CASE("zero network gives a zero jet") {
  NetworkParams net{{2, 4, 1}, Eigen::VectorXd::Zero(17)};
  ad::Tape tape(std::span<const double>(net.flat.data(), 17));
  const TapedNetwork taped(net, tape);
  Eigen::MatrixXd x(2, 1);
  x << 0.3, -0.8;
  const ad::JetVar u = taped.forward_jet(ad::make_jet(tape, x, Eigen::MatrixXd::Ones(2, 1)));
  CHECK(u.val.scalar() == 0.0);
  CHECK(u.d1.scalar() == 0.0);
  CHECK(u.d2.scalar() == 0.0);
}

TEST_CASE("single affine layer jet") {
  NetworkParams net{{1, 1}, Eigen::VectorXd(2)};
  net.flat << 2.0, 1.0;
  ad::Tape tape(std::span<const double>(net.flat.data(), 2));
  const TapedNetwork taped(net, tape);
  const ad::JetVar u = taped.forward_jet(ad::make_jet(tape, ad::Jet2{3.0, 1.0, 0.0}));
  CHECK(u.val.scalar() == 7.0);
  CHECK(u.d1.scalar() == 2.0);
  CHECK(u.d2.scalar() == 0.0);
}

TEST_CASE("forward value matches a straight-line implementation") {
  const NetworkParams net = init_network({2, 64, 64, 64, 64, 1}, 0);
  Eigen::MatrixXd p(2, 1);
  p << 0.5, 0.5;
  const double expected = oracle::naive_forward(net, {0.5, 0.5});
  CHECK(std::abs(evaluate(net, p)(0, 0) - expected) <= 1e-12);

  ad::Tape tape(std::span<const double>(net.flat.data(), static_cast<std::size_t>(net.flat.size())));
  const TapedNetwork taped(net, tape);
  CHECK(std::abs(taped.forward(p).scalar() - expected) <= 1e-12);
  const int axes[] = {0, 1};
  CHECK(std::abs(taped.forward_axes(p, axes).value.scalar() - expected) <= 1e-12);
}

TEST_CASE("recording does not change values") {
  const NetworkParams net = oracle::random_network({2, 6, 6, 1}, 12);
  Eigen::MatrixXd pts = Eigen::MatrixXd::Random(2, 20);
  ad::Tape tape(std::span<const double>(net.flat.data(), static_cast<std::size_t>(net.flat.size())));
  const TapedNetwork taped(net, tape);
  CHECK(taped.forward(pts).value() == evaluate(net, pts));
}

TEST_CASE("hidden activations stay inside (-1, 1)") {
  const NetworkParams net = oracle::random_network({2, 8, 8, 8, 1}, 21, 3.0);
  const Eigen::MatrixXd pts = 5.0 * Eigen::MatrixXd::Random(2, 200);
  const auto hidden = hidden_activations(net, pts);
  CHECK(hidden.size() == 3);
  for (const auto& h : hidden) CHECK(h.cwiseAbs().maxCoeff() <= 1.0);
}

TEST_CASE("width mismatch") {
  const NetworkParams net = init_network({2, 3, 1}, 0);
  CHECK_THROWS_AS(evaluate(net, Eigen::MatrixXd::Zero(1, 4)), UsageError);
  ad::Tape tape(std::span<const double>(net.flat.data(), static_cast<std::size_t>(net.flat.size())));
  const TapedNetwork taped(net, tape);
  CHECK_THROWS_AS(taped.forward(Eigen::MatrixXd::Zero(3, 1)), UsageError);
}

TEST_CASE("parameter validation") {
  NetworkParams net = init_network({1, 2, 1}, 0);
  net.flat[0] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(validate(net), UsageError);
  net.flat.resize(3);
  CHECK_THROWS_AS(validate(net), UsageError);
}

TEST_CASE("checkpoint round trip is bit exact") {
  const Checkpoint chk = sample_checkpoint();
  const auto path = scratch("roundtrip.json");
  save_checkpoint(chk, path);
  const Checkpoint back = load_checkpoint(path);
  CHECK(back == chk);
  CHECK(back.params.flat[2] == 0.1);

  const Checkpoint big{init_network({2, 64, 64, 64, 64, 1}, 17), {"wave", 1.5, "lbfgs", 12, 1e-5, 17, 1}};
  CHECK(from_json_text(to_json_text(big)) == big);
}

TEST_CASE("checkpoint document layout") {
  const std::string text = to_json_text(sample_checkpoint());
  for (const char* key : {"\"format_version\"", "\"layer_dims\"", "\"flat\"", "\"meta\"",
                          "\"problem_kind\"", "\"problem_constant\"", "\"optimizer\"", "\"epoch\"",
                          "\"final_loss\"", "\"seed\""}) {
    CHECK(text.find(key) != std::string::npos);
  }
}

TEST_CASE("checkpoint load errors are distinct") {
  using Kind = CheckpointError::Kind;
  auto kind_of = [](const std::string& text) {
    try {
      from_json_text(text);
    } catch (const CheckpointError& e) {
      return e.kind();
    }
    FAIL("expected a checkpoint error");
    return Kind::kIo;
  };
  std::string good = to_json_text(sample_checkpoint());

  std::string wrong_len = good;
  wrong_len.replace(wrong_len.find("\"flat\": ["), 9, "\"flat\": [1.0,");
  CHECK(kind_of(wrong_len) == Kind::kInconsistent);

  std::string v2 = good;
  v2.replace(v2.find("\"format_version\": 1"), 19, "\"format_version\": 2");
  CHECK(kind_of(v2) == Kind::kVersion);

  CHECK(kind_of(good.substr(0, good.size() / 2)) == Kind::kCorrupt);
  CHECK(kind_of("{\"format_version\": 1}") == Kind::kCorrupt);

  try {
    load_checkpoint(scratch("does_not_exist.json"));
    FAIL("expected an io error");
  } catch (const CheckpointError& e) {
    CHECK(e.kind() == Kind::kIo);
  }
}

TEST_CASE("checkpoint file name") {
  CheckpointMeta meta{"shm", 20.0, "hybrid", 5651, 1e-3, 0, 1};
  CHECK(checkpoint_file_name(meta) == "shm_20_hybrid_5651.json");
  meta = {"wave", 1.5, "lbfgs", 300, 1e-5, 0, 1};
  CHECK(checkpoint_file_name(meta) == "wave_1.5_lbfgs_300.json");
}

}
