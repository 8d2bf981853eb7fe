#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "pathgen/checkpoint.hpp"
#include "pathgen/grad_check.hpp"
#include "pathgen/optim.hpp"
#include "pathgen/params.hpp"
#include "pathgen/rng.hpp"
#include "pathgen/tape.hpp"
#include "pathgen/tensor.hpp"
#include "pathgen/util.hpp"

using namespace pathgen;

namespace {

Tensor<double> random_tensor(int r, int c, Rng& rng, double lo = -0.5, double hi = 0.5) {
    Tensor<double> t(r, c);
    init_uniform(t, rng, lo, hi);
    return t;
}

// Reference matmul, deliberately naive.
Tensor<double> naive_gemm(bool ta, bool tb, const Tensor<double>& A, const Tensor<double>& B) {
    int m = ta ? A.cols : A.rows;
    int k = ta ? A.rows : A.cols;
    int n = tb ? B.rows : B.cols;
    Tensor<double> C(m, n);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            double acc = 0;
            for (int p = 0; p < k; ++p) {
                double a = ta ? A.at(p, i) : A.at(i, p);
                double b = tb ? B.at(j, p) : B.at(p, j);
                acc += a * b;
            }
            C.at(i, j) = acc;
        }
    return C;
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("string helpers") {
    CHECK(tokenize_words("Tropical_Rainforest  test") ==
          std::vector<std::string>{"tropical", "rainforest", "test"});
    CHECK(tokenize_words("") == std::vector<std::string>{});
    CHECK(join({"a", "b", "c"}) == "a b c");
    CHECK(split("a\t\tb", '\t') == std::vector<std::string>{"a", "", "b"});
    CHECK(trim("  x y \r\n") == "x y");
    CHECK(to_lower("AbC") == "abc");
}

TEST_CASE("rng streams replay exactly and child seeds differ") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    Rng c(43);
    bool all_equal = true;
    Rng a2(42);
    for (int i = 0; i < 10; ++i) all_equal = all_equal && (a2.next_u64() == c.next_u64());
    CHECK_FALSE(all_equal);

    CHECK(child_seed(1, 0) != child_seed(1, 1));
    CHECK(child_seed(1, 0) != child_seed(2, 0));

    Rng d(7);
    for (int i = 0; i < 1000; ++i) {
        uint64_t x = d.uniform_int(13);
        CHECK(x < 13);
        double r = d.uniform_real();
        CHECK(r >= 0.0);
        CHECK(r < 1.0);
    }
    CHECK_THROWS_AS(d.uniform_int(0), Error);
}

TEST_CASE("deterministic shuffle is a stable permutation") {
    std::vector<int> v1(50), v2(50);
    for (int i = 0; i < 50; ++i) v1[i] = v2[i] = i;
    Rng r1(9), r2(9);
    deterministic_shuffle(v1, r1);
    deterministic_shuffle(v2, r2);
    CHECK(v1 == v2);
    std::vector<int> sorted = v1;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 50; ++i) CHECK(sorted[i] == i);
}

TEST_CASE("parallel_for matches serial execution for any thread count") {
    std::vector<long> serial(257), par(257);
    parallel_for(serial.size(), 1, [&](size_t i) { serial[i] = static_cast<long>(i * i); });
    parallel_for(par.size(), 4, [&](size_t i) { par[i] = static_cast<long>(i * i); });
    CHECK(serial == par);
}

TEST_CASE("gemm agrees with the naive reference") {
    Rng rng(1);
    Tensor<double> A = random_tensor(7, 5, rng);
    Tensor<double> B = random_tensor(5, 6, rng);
    Tensor<double> At = random_tensor(5, 7, rng);
    Tensor<double> Bt = random_tensor(6, 5, rng);

    Tensor<double> C(7, 6);
    gemm(false, false, A, B, C, false);
    Tensor<double> R = naive_gemm(false, false, A, B);
    for (size_t i = 0; i < C.v.size(); ++i) CHECK(C.v[i] == doctest::Approx(R.v[i]).epsilon(1e-12));

    gemm(false, true, A, Bt, C, false);
    R = naive_gemm(false, true, A, Bt);
    for (size_t i = 0; i < C.v.size(); ++i) CHECK(C.v[i] == doctest::Approx(R.v[i]).epsilon(1e-12));

    gemm(true, false, At, B, C, false);
    R = naive_gemm(true, false, At, B);
    for (size_t i = 0; i < C.v.size(); ++i) CHECK(C.v[i] == doctest::Approx(R.v[i]).epsilon(1e-12));

    // accumulate adds on top of existing values
    Tensor<double> C2 = C;
    gemm(true, false, At, B, C2, true);
    for (size_t i = 0; i < C.v.size(); ++i)
        CHECK(C2.v[i] == doctest::Approx(2 * C.v[i]).epsilon(1e-12));

    Tensor<double> bad(3, 3);
    CHECK_THROWS_AS(gemm(false, false, A, bad, C, false), Error);
}

TEST_CASE("softmax closed forms") {
    Tape<double> t;
    Tensor<double> x(1, 3);
    x.v = {std::log(1.0), std::log(2.0), std::log(3.0)};
    auto h = t.softmax_rows(t.leaf(x, false));
    const auto& y = t.value(h);
    CHECK(y.v[0] == doctest::Approx(1.0 / 6).epsilon(1e-12));
    CHECK(y.v[1] == doctest::Approx(2.0 / 6).epsilon(1e-12));
    CHECK(y.v[2] == doctest::Approx(3.0 / 6).epsilon(1e-12));

    Tensor<double> big(1, 2);
    big.v = {1000.0, 0.0};
    auto hb = t.softmax_rows(t.leaf(big, false));
    CHECK(t.value(hb).v[0] == doctest::Approx(1.0));
    CHECK(t.value(hb).v[1] == doctest::Approx(0.0));
    CHECK(t.value(hb).all_finite());
}

TEST_CASE("causal softmax normalizes prefixes and zeroes the strict upper triangle") {
    Rng rng(3);
    Tape<double> t;
    auto h = t.causal_softmax_rows(t.leaf(random_tensor(5, 5, rng, -2, 2), false));
    const auto& y = t.value(h);
    for (int i = 0; i < 5; ++i) {
        double sum = 0;
        for (int j = 0; j < 5; ++j) {
            if (j > i) CHECK(y.at(i, j) == 0.0);
            sum += y.at(i, j);
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("layer norm standardizes each row") {
    Tape<double> t;
    Tensor<double> x(1, 4);
    x.v = {1.0, 2.0, 3.0, 4.0};
    Tensor<double> g(1, 4), b(1, 4);
    g.fill(1.0);
    auto h = t.layer_norm(t.leaf(x, false), t.leaf(g, false), t.leaf(b, false));
    const auto& y = t.value(h);
    double mean = 0, var = 0;
    for (double v : y.v) mean += v;
    mean /= 4;
    for (double v : y.v) var += (v - mean) * (v - mean);
    var /= 4;
    CHECK(mean == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(var == doctest::Approx(1.0).epsilon(1e-3));  // eps shrinks it slightly
    CHECK(y.v[3] > y.v[2]);
    CHECK(y.v[2] > y.v[1]);
}

TEST_CASE("cross entropy of uniform logits is log C") {
    Tape<double> t;
    Tensor<double> x(2, 5);
    auto h = t.cross_entropy_mean(t.leaf(x, false), {0, 3}, {1, 1});
    CHECK(t.value(h).v[0] == doctest::Approx(std::log(5.0)).epsilon(1e-12));

    CHECK_THROWS_AS(t.cross_entropy_mean(t.leaf(x, false), {0, 3}, {0, 0}), Error);
    CHECK_THROWS_AS(t.cross_entropy_mean(t.leaf(x, false), {0, 9}, {1, 1}), Error);
}

TEST_CASE("binary cross entropy closed forms") {
    Tape<double> t;
    Tensor<double> z(1, 2);
    z.v = {0.0, 2.0};
    Tensor<double> y(1, 2);
    y.v = {0.5, 1.0};
    auto h = t.bce_with_logits_mean(t.leaf(z, false), y);
    double expect = (std::log(2.0) + std::log1p(std::exp(-2.0))) / 2;
    CHECK(t.value(h).v[0] == doctest::Approx(expect).epsilon(1e-12));

    // huge logits stay finite
    Tensor<double> zb(1, 2);
    zb.v = {5000.0, -5000.0};
    Tensor<double> yb(1, 2);
    yb.v = {1.0, 0.0};
    auto hb = t.bce_with_logits_mean(t.leaf(zb, false), yb);
    CHECK(t.value(hb).v[0] == doctest::Approx(0.0));
}

TEST_CASE("elementwise activations at known points") {
    Tape<double> t;
    Tensor<double> x(1, 3);
    x.v = {0.0, 1.0, -1.0};
    CHECK(t.value(t.sigmoid_(t.leaf(x, false))).v[0] == doctest::Approx(0.5));
    CHECK(t.value(t.tanh_(t.leaf(x, false))).v[1] == doctest::Approx(std::tanh(1.0)));
    CHECK(t.value(t.gelu(t.leaf(x, false))).v[0] == doctest::Approx(0.0));
    // gelu(1) reference value of the tanh approximation
    double u = 0.7978845608028654 * (1 + 0.044715);
    CHECK(t.value(t.gelu(t.leaf(x, false))).v[1] ==
          doctest::Approx(0.5 * (1 + std::tanh(u))).epsilon(1e-12));
}

namespace {

// One function through every tape op; used for both the finite-difference
// agreement test and the corrupted-gradient sensitivity test.
double composite_loss(ParamStore<double>& ps) {
    Tape<double> t;
    BoundParams<double> P(t, ps);
    auto c0 = t.matmul(P["A"], P["B"]);                    // [3,5]
    auto c1 = t.matmul_nt(c0, P["W"]);                     // [3,2]
    auto c2 = t.add_rowvec(c1, P["b"]);                    // [3,2]
    auto c3 = t.mul(c2, t.tanh_(P["G"]));                  // [3,2]
    auto c4 = t.gelu(t.scale(c3, 0.5));                    // [3,2]
    auto c5 = t.sigmoid_(c3);                              // [3,2]
    auto cc = t.concat_cols({c4, c5});                     // [3,4]
    auto sl = t.slice_cols(cc, 1, 3);                      // [3,2]
    auto rs = t.reshape(t.transpose(sl), 3, 2);            // [3,2]
    auto ga = t.gather_rows(rs, {1, 0, 1});                // [3,2]
    auto att = t.causal_softmax_rows(P["S"]);              // [4,4]
    auto av = t.matmul(att, P["V"]);                       // [4,2]
    auto ln = t.layer_norm(av, P["ln_g"], P["ln_b"]);      // [4,2]
    auto sm = t.softmax_rows(ln);                          // [4,2]
    auto stack = t.concat_rows({ga, t.add(c4, c4)});       // [6,2]
    auto ce = t.cross_entropy_mean(stack, {0, 1, 0, 1, 0, 1}, {1, 1, 0, 1, 1, 1});
    auto mr = t.mean_rows(sm);                             // [1,2]
    Tensor<double> ytgt(1, 2);
    ytgt.v = {0.3, 0.8};
    auto bce = t.bce_with_logits_mean(mr, ytgt);
    auto loss = t.add(ce, t.scale(bce, 2.0));
    t.backward(loss);
    P.pull_grads();
    return t.value(loss).v[0];
}

ParamStore<double> composite_params(uint64_t seed) {
    Rng rng(seed);
    ParamStore<double> ps;
    ps.add("A", random_tensor(3, 4, rng));
    ps.add("B", random_tensor(4, 5, rng));
    ps.add("W", random_tensor(2, 5, rng));
    ps.add("b", random_tensor(1, 2, rng));
    ps.add("G", random_tensor(3, 2, rng));
    ps.add("S", random_tensor(4, 4, rng, -1, 1));
    ps.add("V", random_tensor(4, 2, rng));
    ps.add("ln_g", random_tensor(1, 2, rng, 0.5, 1.5));
    ps.add("ln_b", random_tensor(1, 2, rng));
    return ps;
}

}  // namespace

TEST_CASE("analytic gradients match central finite differences across all ops") {
    ParamStore<double> ps = composite_params(11);
    GradCheckReport rep = grad_check(ps, composite_loss, 99, 1000, 1e-5);
    INFO("worst " << rep.worst_param << "[" << rep.worst_index << "] analytic="
                  << rep.analytic << " numeric=" << rep.numeric);
    CHECK(rep.checked >= 75);
    CHECK(rep.worst_rel_err < 1e-4);
}

TEST_CASE("the checker flags a corrupted gradient") {
    ParamStore<double> ps = composite_params(11);
    auto corrupted = [](ParamStore<double>& s) {
        double loss = composite_loss(s);
        s.at("W").grad.v[0] += 1.0;
        return loss;
    };
    GradCheckReport rep = grad_check(ps, corrupted, 99, 1000, 1e-5);
    CHECK(rep.worst_rel_err > 1e-2);
}

TEST_CASE("adam single and double step match the hand-derived update") {
    ParamStore<double> ps;
    Tensor<double> w(1, 1);
    w.v = {1.0};
    ps.add("w", w);
    AdamConfig cfg;

    ps.zero_grad();
    ps.at("w").grad.v[0] = 0.5;
    ps.at("w").grad_set = true;
    adam_step(ps, cfg, 0.1);
    double delta = 0.1 * 0.5 / (0.5 + 1e-8);  // bias correction cancels on step 1
    CHECK(ps.at("w").value.v[0] == doctest::Approx(1.0 - delta).epsilon(1e-9));

    ps.zero_grad();
    ps.at("w").grad.v[0] = 0.5;
    ps.at("w").grad_set = true;
    adam_step(ps, cfg, 0.1);
    CHECK(ps.at("w").value.v[0] == doctest::Approx(1.0 - 2 * delta).epsilon(1e-7));

    ps.zero_grad();
    CHECK_THROWS_AS(adam_step(ps, cfg, 0.1), Error);
}

TEST_CASE("learning-rate schedule ramps then decays linearly") {
    CHECK(lr_schedule(0, 2.0, 500, 2000) == doctest::Approx(0.0));
    CHECK(lr_schedule(250, 2.0, 500, 2000) == doctest::Approx(1.0));
    CHECK(lr_schedule(500, 2.0, 500, 2000) == doctest::Approx(2.0));
    CHECK(lr_schedule(1250, 2.0, 500, 2000) == doctest::Approx(1.0));
    CHECK(lr_schedule(2000, 2.0, 500, 2000) == doctest::Approx(0.0));
    CHECK_THROWS_AS(lr_schedule(0, 1.0, 500, 500), Error);
    CHECK_THROWS_AS(lr_schedule(-1, 1.0, 0, 10), Error);
    CHECK_THROWS_AS(lr_schedule(11, 1.0, 0, 10), Error);
}

TEST_CASE("global norm clipping rescales exactly at the threshold") {
    ParamStore<double> ps;
    Tensor<double> g(1, 2);
    ps.add("p", g);
    ps.at("p").grad.v = {3.0, 4.0};
    double norm = clip_global_norm(ps, 1.0);
    CHECK(norm == doctest::Approx(5.0));
    CHECK(ps.at("p").grad.v[0] == doctest::Approx(0.6));
    CHECK(ps.at("p").grad.v[1] == doctest::Approx(0.8));

    ps.at("p").grad.v = {0.3, 0.4};
    clip_global_norm(ps, 1.0);
    CHECK(ps.at("p").grad.v[0] == doctest::Approx(0.3));
}

TEST_CASE("param store basics") {
    ParamStore<float> ps;
    ps.add("a", Tensor<float>(2, 2));
    CHECK_THROWS_AS(ps.add("a", Tensor<float>(2, 2)), Error);
    CHECK_THROWS_AS(ps.at("missing"), Error);
    CHECK(ps.param_count() == 4);

    ps.at("a").value.at(0, 1) = 7.0f;
    ParamStore<float> snap = ps.snapshot_values();
    ps.at("a").value.at(0, 1) = 9.0f;
    ps.load_values(snap);
    CHECK(ps.at("a").value.at(0, 1) == 7.0f);

    ParamStore<double> pd = ps.cast<double>();
    CHECK(pd.at("a").value.at(0, 1) == 7.0);
}

TEST_CASE("checkpoint container round-trips bytes and validates structure") {
    ParamStore<float> ps;
    Rng rng(5);
    Tensor<float> a(3, 4), z(2, 2);
    for (auto& x : a.v) x = static_cast<float>(rng.uniform_range(-1, 1));
    for (auto& x : z.v) x = static_cast<float>(rng.uniform_range(-1, 1));
    ps.add("beta", z);
    ps.add("alpha", a);

    nlohmann::json extra = {{"vocab", {"x", "y"}}, {"config", {{"width", 4}}}};
    std::string p1 = temp_path("ck_roundtrip.bin");
    save_checkpoint(p1, "demo", ps, extra);

    Checkpoint ck = load_checkpoint_expect(p1, "demo");
    CHECK(ck.header["kind"] == "demo");
    CHECK(ck.header["vocab"][1] == "y");
    CHECK(ck.header["config"]["width"] == 4);
    CHECK(ck.params.at("alpha").value.v == a.v);
    CHECK(ck.params.at("beta").value.v == z.v);
    // sorted param order in the header
    CHECK(ck.header["params"][0]["name"] == "alpha");

    CHECK_THROWS_AS(load_checkpoint_expect(p1, "other"), Error);

    // identical stores serialize to identical bytes
    std::string p2 = temp_path("ck_roundtrip2.bin");
    save_checkpoint(p2, "demo", ps, extra);
    CHECK(read_file(p1) == read_file(p2));

    // corrupted magic
    std::string bytes = read_file(p1);
    bytes[0] = 'X';
    std::string p3 = temp_path("ck_badmagic.bin");
    write_file(p3, bytes);
    CHECK_THROWS_AS(load_checkpoint(p3), Error);

    // truncated payload
    std::string p4 = temp_path("ck_trunc.bin");
    write_file(p4, read_file(p1).substr(0, read_file(p1).size() - 5));
    CHECK_THROWS_AS(load_checkpoint(p4), Error);

    // trailing garbage
    std::string p5 = temp_path("ck_trail.bin");
    write_file(p5, read_file(p1) + "zz");
    CHECK_THROWS_AS(load_checkpoint(p5), Error);

    CHECK_THROWS_AS(load_checkpoint(temp_path("ck_does_not_exist.bin")), Error);
}

TEST_CASE("tape rejects structural misuse") {
    Tape<double> t;
    auto a = t.leaf(Tensor<double>(2, 3), true);
    auto b = t.leaf(Tensor<double>(3, 3), false);
    CHECK_THROWS_AS(t.add(a, b), Error);
    CHECK_THROWS_AS(t.backward(t.matmul(a, b)), Error);  // loss not scalar
    CHECK_THROWS_AS(t.grad(b), Error);
    CHECK_THROWS_AS(t.slice_cols(a, 2, 1), Error);
    CHECK_THROWS_AS(t.gather_rows(a, {5}), Error);
    CHECK_THROWS_AS(t.causal_softmax_rows(a), Error);
    CHECK_THROWS_AS(t.reshape(a, 4, 4), Error);
}
