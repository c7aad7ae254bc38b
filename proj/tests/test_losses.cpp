// Copyright 2026 The VGD Splat Authors
// SPDX-License-Identifier: Apache-2.0

#include "vgd/errors.hpp"
#include "vgd/losses.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

namespace vgd {
namespace {

using test::random_image;
using test::uniform;

DepthMap random_depth(std::mt19937_64& rng, int w, int h, double lo = 0.5, double hi = 50.0) {
    DepthMap d{random_image(rng, w, h, 1, lo, hi)};
    return d;
}

// Direct 2D window SSIM: one weighted sum per window, no separable filtering.
double ssim_oracle(const Image& a, const Image& b) {
    double k[11], ks = 0.0;
    for (int i = 0; i < 11; ++i) {
        k[i] = std::exp(-0.5 * (i - 5) * (i - 5) / (1.5 * 1.5));
        ks += k[i];
    }
    double total = 0.0;
    int count = 0;
    for (int c = 0; c < a.channels(); ++c) {
        for (int y0 = 0; y0 + 11 <= a.height(); ++y0) {
            for (int x0 = 0; x0 + 11 <= a.width(); ++x0) {
                double ma = 0, mb = 0, aa = 0, bb = 0, ab = 0;
                for (int dy = 0; dy < 11; ++dy) {
                    for (int dx = 0; dx < 11; ++dx) {
                        const double w = k[dy] * k[dx] / (ks * ks);
                        const double va = a.at(y0 + dy, x0 + dx, c), vb = b.at(y0 + dy, x0 + dx, c);
                        ma += w * va;
                        mb += w * vb;
                        aa += w * va * va;
                        bb += w * vb * vb;
                        ab += w * va * vb;
                    }
                }
                const double sa = aa - ma * ma, sb = bb - mb * mb, sab = ab - ma * mb;
                total += (2 * ma * mb + 1e-4) * (2 * sab + 9e-4) /
                         ((ma * ma + mb * mb + 1e-4) * (sa + sb + 9e-4));
                ++count;
            }
        }
    }
    return total / count;
}

TEST(L1Loss, Examples) {
    std::mt19937_64 rng(1);
    const Image a = random_image(rng, 7, 5, 3);
    EXPECT_EQ(l1_loss(a, a), 0.0);
    EXPECT_DOUBLE_EQ(l1_loss(Image(4, 4, 3, 0.0), Image(4, 4, 3, 0.5)), 0.5);
    const Image b = random_image(rng, 7, 5, 3);
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a.data()[i] - b.data()[i]);
    EXPECT_NEAR(l1_loss(a, b), s / a.size(), 1e-9);
    EXPECT_THROW(l1_loss(a, Image(7, 5, 1)), ValidationError);
}

TEST(Ssim, IdentityIsOne) {
    std::mt19937_64 rng(2);
    for (int i = 0; i < 5; ++i) {
        const Image a = random_image(rng, 16 + i, 12 + i, 3);
        EXPECT_NEAR(ssim(a, a), 1.0, 1e-6);
        EXPECT_NEAR(ssim_loss(a, a), 0.0, 1e-6);
    }
    EXPECT_NEAR(ssim(Image(11, 11, 1, 0.3), Image(11, 11, 1, 0.3)), 1.0, 1e-12);
}

TEST(Ssim, InvertedCheckerboardIsNegative) {
    Image a(24, 24, 3), b(24, 24, 3);
    for (int y = 0; y < 24; ++y) {
        for (int x = 0; x < 24; ++x) {
            for (int c = 0; c < 3; ++c) {
                a.at(y, x, c) = (x + y) % 2;
                b.at(y, x, c) = 1.0 - a.at(y, x, c);
            }
        }
    }
    EXPECT_LT(ssim(a, b), 0.0);
    EXPECT_NEAR(ssim(a, b), ssim_oracle(a, b), 1e-9);
}

TEST(Ssim, ShiftLowersScore) {
    std::mt19937_64 rng(3);
    const Image a = random_image(rng, 20, 20, 3, 0.0, 0.8);
    Image b = a;
    for (double& v : b.data()) v += 0.1;
    EXPECT_LT(ssim(a, b), 1.0);
    EXPECT_LT(ssim(a, b), ssim(a, a));
}

TEST(Ssim, MatchesDirectWindowOracle) {
    std::mt19937_64 rng(4);
    for (int i = 0; i < 5; ++i) {
        const Image a = random_image(rng, 13 + 2 * i, 17, 3);
        const Image b = random_image(rng, 13 + 2 * i, 17, 3);
        EXPECT_NEAR(ssim(a, b), ssim_oracle(a, b), 1e-9);
    }
}

TEST(Ssim, RejectsSmallImages) {
    EXPECT_THROW(ssim(Image(10, 20, 3), Image(10, 20, 3)), ValidationError);
    EXPECT_THROW(ssim(Image(16, 16, 3), Image(16, 15, 3)), ValidationError);
}

TEST(SmoothL1, Examples) {
    EXPECT_DOUBLE_EQ(smooth_l1(Image(3, 3, 1, 1.5), Image(3, 3, 1, 1.0)), 0.125);
    EXPECT_DOUBLE_EQ(smooth_l1(Image(3, 3, 1, 0.0), Image(3, 3, 1, 2.0)), 1.5);
    EXPECT_DOUBLE_EQ(smooth_l1(Image(3, 3, 1, 1.0), Image(3, 3, 1, 0.0)), 0.5);
    const double below = smooth_l1(Image(1, 1, 1, 1.0 - 1e-9), Image(1, 1, 1, 0.0));
    const double above = smooth_l1(Image(1, 1, 1, 1.0 + 1e-9), Image(1, 1, 1, 0.0));
    EXPECT_NEAR(below, 0.5, 1e-8);
    EXPECT_NEAR(above, 0.5, 1e-8);
}

TEST(LowerMedian, EvenAndOdd) {
    EXPECT_EQ(lower_median({3, 1, 2}), 2);
    EXPECT_EQ(lower_median({4, 1, 3, 2}), 2);
    EXPECT_EQ(lower_median({5}), 5);
}

TEST(AffineInvariant, ScaleInvariance) {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 10; ++i) {
        const DepthMap d = random_depth(rng, 9, 7);
        EXPECT_EQ(affine_invariant_loss(d, d), 0.0);
        for (double c : {1e-3, 0.5, 1.0, 7.0, 1e3}) {
            DepthMap s = d;
            for (double& v : s.values.data()) v *= c;
            EXPECT_LT(affine_invariant_loss(s, d), 1e-9);
        }
    }
    EXPECT_NEAR(affine_invariant_loss(make_depth_map(4, 4, 3.0), make_depth_map(4, 4, 0.2)), 0.0, 1e-12);
}

TEST(AffineInvariant, MatchesDirectFormula) {
    std::mt19937_64 rng(6);
    const DepthMap t = random_depth(rng, 8, 6);
    DepthMap p = t;
    for (double& v : p.values.data()) v = std::pow(v, 1.1);
    auto med = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        return v[(v.size() - 1) / 2];
    };
    std::vector<double> pv(p.values.data().begin(), p.values.data().end());
    std::vector<double> tv(t.values.data().begin(), t.values.data().end());
    const double mp = med(pv), mt = med(tv);
    double s = 0.0;
    for (std::size_t i = 0; i < pv.size(); ++i) {
        const double d = std::log(pv[i] / mp) - std::log(tv[i] / mt);
        s += d * d;
    }
    EXPECT_NEAR(affine_invariant_loss(p, t), std::sqrt(s / pv.size()), 1e-9);
    EXPECT_GT(affine_invariant_loss(p, t), 0.0);
}

TEST(AffineInvariant, ClampsNonPositive) {
    DepthMap a = make_depth_map(3, 3, 1.0);
    a.at(1, 1) = 0.0;
    EXPECT_TRUE(std::isfinite(affine_invariant_loss(a, make_depth_map(3, 3, 1.0))));
}

double smoothness_oracle(const DisparityMap& d, const Image& img) {
    const int W = d.width(), H = d.height();
    double mean = 0.0;
    for (double v : d.values.data()) mean += v;
    mean /= W * H;
    double sx = 0.0, sy = 0.0;
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x + 1 < W; ++x) {
            double g = 0.0;
            for (int c = 0; c < img.channels(); ++c) g += std::abs(img.at(y, x + 1, c) - img.at(y, x, c));
            sx += std::abs(d.at(y, x + 1) - d.at(y, x)) / mean * std::exp(-g / img.channels());
        }
    }
    for (int y = 0; y + 1 < H; ++y) {
        for (int x = 0; x < W; ++x) {
            double g = 0.0;
            for (int c = 0; c < img.channels(); ++c) g += std::abs(img.at(y + 1, x, c) - img.at(y, x, c));
            sy += std::abs(d.at(y + 1, x) - d.at(y, x)) / mean * std::exp(-g / img.channels());
        }
    }
    return sx / ((W - 1) * H) + sy / (W * (H - 1));
}

TEST(EdgeAwareSmoothness, Examples) {
    std::mt19937_64 rng(7);
    const Image img = random_image(rng, 10, 8, 3);
    EXPECT_EQ(edge_aware_smoothness(make_disparity_map(10, 8, 2.5), img), 0.0);
    DisparityMap d{random_image(rng, 10, 8, 1, 0.1, 3.0)};
    const double base = edge_aware_smoothness(d, img);
    EXPECT_NEAR(base, smoothness_oracle(d, img), 1e-12);
    for (double c : {0.01, 3.0, 1e4}) {
        DisparityMap s = d;
        for (double& v : s.values.data()) v *= c;
        EXPECT_NEAR(edge_aware_smoothness(s, img), base, 1e-9);
    }
    EXPECT_THROW(edge_aware_smoothness(make_disparity_map(1, 8, 1.0), Image(1, 8, 3)), ValidationError);
}

TEST(EdgeAwareSmoothness, StepAlignedWithEdgeScoresLower) {
    DisparityMap d = make_disparity_map(12, 12, 1.0);
    Image edge(12, 12, 3, 0.1), flat(12, 12, 3, 0.1);
    for (int y = 0; y < 12; ++y) {
        for (int x = 6; x < 12; ++x) {
            d.at(y, x) = 3.0;
            for (int c = 0; c < 3; ++c) edge.at(y, x, c) = 0.9;
        }
    }
    EXPECT_LT(edge_aware_smoothness(d, edge), edge_aware_smoothness(d, flat));
}

TEST(Photometric, Reductions) {
    std::mt19937_64 rng(8);
    const Image a = random_image(rng, 16, 16, 3), b = random_image(rng, 16, 16, 3);
    EXPECT_NEAR(photometric_loss(a, a, 0.85), 0.0, 1e-6);
    EXPECT_EQ(photometric_loss(a, b, 0.0), l1_loss(a, b));
    EXPECT_EQ(photometric_loss(a, b, 1.0), (1.0 - ssim(a, b)) / 2.0);
    EXPECT_NEAR(photometric_loss(a, b, 0.85), 0.85 * (1 - ssim(a, b)) / 2 + 0.15 * l1_loss(a, b), 1e-12);
    EXPECT_THROW(photometric_loss(a, b, 1.5), ValidationError);
}

TEST(RenderLoss, Examples) {
    std::mt19937_64 rng(9);
    const Image a = random_image(rng, 16, 16, 3), b = random_image(rng, 16, 16, 3);
    LossWeights w;
    EXPECT_NEAR(render_loss(a, a, w).total, 0.0, 1e-6);
    w.l1 = 1;
    w.ssim = 0;
    EXPECT_EQ(render_loss(a, b, w).total, l1_loss(a, b));
    w = {};
    const LossReport r = render_loss(a, b, w);
    EXPECT_NEAR(r.total, w.l1 * l1_loss(a, b) + w.ssim * (1 - ssim(a, b)), 1e-9);
    EXPECT_NEAR(r.total, r.weighted_sum(), 1e-12);
    ASSERT_NE(r.find("perceptual"), nullptr);
    EXPECT_FALSE(r.find("perceptual")->present);
    w.perceptual = 0.5;
    EXPECT_THROW(render_loss(a, b, w), ValidationError);
    const LossReport p = render_loss(a, b, w, [](const Image&, const Image&) { return 0.25; });
    EXPECT_TRUE(p.find("perceptual")->present);
    EXPECT_NEAR(p.total, r.total + 0.125, 1e-12);
}

TEST(TotalLoss, PaperWeights) {
    LossWeights w;
    LossReport unit;
    unit.components.push_back({"render", 1.0, 1.0, true});
    unit.total = 1.0;
    EXPECT_NEAR(total_loss(unit, 1.0, 1.0, w).total, 1.0105, 1e-15);
    LossReport zero;
    EXPECT_EQ(total_loss(zero, 0.0, 0.0, w).total, 0.0);
    LossReport r2 = unit;
    r2.total = 2.0;
    EXPECT_NEAR(total_loss(r2, 2.0, 2.0, w).total, 2 * total_loss(unit, 1.0, 1.0, w).total, 1e-12);
    const LossReport t = total_loss(unit, 0.3, 0.7, w);
    EXPECT_NEAR(t.total, t.weighted_sum(), 1e-12);
}

TEST(LocLoss, AbsentSlotsContributeNothing) {
    LossWeights w;
    const LossReport r = loc_loss(std::nullopt, std::nullopt, std::nullopt, 2.0, w);
    EXPECT_NEAR(r.total, w.smooth * 2.0, 1e-15);
    const LossReport all = loc_loss(0.1, 0.2, 0.3, 2.0, w);
    EXPECT_NEAR(all.total, 0.1 + w.sp * 0.2 + w.sp_tm * 0.3 + w.smooth * 2.0, 1e-15);
    EXPECT_NEAR(all.total, all.weighted_sum(), 1e-15);
}

TEST(LossWeights, RejectNegative) {
    LossWeights w;
    EXPECT_NO_THROW(w.validate());
    w.distill = -1;
    EXPECT_THROW(w.validate(), ValidationError);
}

TEST(Psnr, Examples) {
    Image a(4, 4, 3, 0.2);
    Image b = a;
    EXPECT_EQ(psnr(a, b), kPsnrCap);
    for (double& v : b.data()) v += 0.1;
    EXPECT_NEAR(psnr(a, b), 20.0, 1e-9);
}

TEST(Losses, NonNegativeAndZeroOnIdentical) {
    std::mt19937_64 rng(10);
    const Image a = random_image(rng, 12, 12, 3), b = random_image(rng, 12, 12, 3);
    const DepthMap da = random_depth(rng, 12, 12), db = random_depth(rng, 12, 12);
    EXPECT_GE(l1_loss(a, b), 0.0);
    EXPECT_GE(ssim_loss(a, b), 0.0);
    EXPECT_GE(smooth_l1(a, b), 0.0);
    EXPECT_GE(photometric_loss(a, b, 0.85), 0.0);
    EXPECT_GE(distill_loss(da, db), 0.0);
    EXPECT_EQ(l1_loss(a, a), 0.0);
    EXPECT_EQ(smooth_l1(a, a), 0.0);
    EXPECT_EQ(distill_loss(da, da), 0.0);
    EXPECT_NEAR(distill_loss(da, db), smooth_l1(da.values, db.values) + affine_invariant_loss(da, db), 1e-12);
}

TEST(LossReport, JsonRecord) {
    std::mt19937_64 rng(11);
    const Image a = random_image(rng, 16, 16, 3), b = random_image(rng, 16, 16, 3);
    const auto j = render_loss(a, b, LossWeights{}).to_json();
    EXPECT_TRUE(j.contains("total"));
    EXPECT_TRUE(j.contains("components"));
}

// Central-difference checks of every gradient on random small inputs.
template <class F, class G>
void check_gradient(Image x, F value, G grad, double h = 1e-6) {
    const Image g = grad(x);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double saved = x.data()[i];
        x.data()[i] = saved + h;
        const double p = value(x);
        x.data()[i] = saved - h;
        const double m = value(x);
        x.data()[i] = saved;
        const double fd = (p - m) / (2 * h);
        const double err = std::abs(fd - g.data()[i]);
        ASSERT_TRUE(err < 1e-6 || err / std::max(std::abs(fd), std::abs(g.data()[i])) < 1e-3)
            << "element " << i << " fd " << fd << " analytic " << g.data()[i];
    }
}

TEST(LossGradients, MatchFiniteDifferences) {
    std::mt19937_64 rng(12);
    const Image t8 = random_image(rng, 8, 8, 3);
    const Image t16 = random_image(rng, 16, 16, 3);
    const DepthMap teacher = random_depth(rng, 8, 8, 1.0, 3.0);
    // Kinks stay away from the random inputs with overwhelming probability.
    check_gradient(random_image(rng, 8, 8, 3),
                   [&](const Image& x) { return l1_loss(x, t8); },
                   [&](const Image& x) { return l1_loss_grad(x, t8).grad; });
    check_gradient(random_image(rng, 8, 8, 3, -2, 3),
                   [&](const Image& x) { return smooth_l1(x, t8); },
                   [&](const Image& x) { return smooth_l1_grad(x, t8).grad; });
    check_gradient(random_image(rng, 16, 16, 3),
                   [&](const Image& x) { return ssim(x, t16); },
                   [&](const Image& x) { return ssim_grad(x, t16).grad; });
    check_gradient(random_image(rng, 16, 16, 3),
                   [&](const Image& x) { return photometric_loss(x, t16, 0.85); },
                   [&](const Image& x) { return photometric_loss_grad(x, t16, 0.85).grad; });
    check_gradient(random_image(rng, 16, 16, 3),
                   [&](const Image& x) { return render_loss(x, t16, LossWeights{}).total; },
                   [&](const Image& x) { return render_loss_grad(x, t16, LossWeights{}).grad; });
    check_gradient(random_image(rng, 8, 8, 1, 1.0, 3.0),
                   [&](const Image& x) { return affine_invariant_loss(DepthMap{x}, teacher); },
                   [&](const Image& x) { return affine_invariant_loss_grad(DepthMap{x}, teacher).grad; });
    check_gradient(random_image(rng, 8, 8, 1, 1.0, 3.0),
                   [&](const Image& x) { return distill_loss(DepthMap{x}, teacher); },
                   [&](const Image& x) { return distill_loss_grad(DepthMap{x}, teacher).grad; });
    check_gradient(random_image(rng, 8, 8, 1, 0.5, 2.0),
                   [&](const Image& x) { return edge_aware_smoothness(DisparityMap{x}, t8); },
                   [&](const Image& x) { return edge_aware_smoothness_grad(DisparityMap{x}, t8).grad; });
}

} // namespace
} // namespace vgd
