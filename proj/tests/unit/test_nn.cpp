#include <gtest/gtest.h>

#include <cstring>
#include <random>

#include "oracle/conv_reference.hpp"
#include "sixway/nn/network.hpp"
#include "test_support.hpp"

using namespace sixway;
using namespace sixway::nn;

namespace {

Tensor random_tensor(int n, int c, int h, int w, std::mt19937_64& rng, float lo = -1.0f, float hi = 1.0f) {
    Tensor t(n, c, h, w);
    std::uniform_real_distribution<float> u(lo, hi);
    for (float& v : t.data) v = u(rng);
    return t;
}

NetArchitecture small_arch(int levels = 2) {
    NetArchitecture a;
    a.encoder_levels = levels;
    a.base_width = 4;
    a.max_width = 16;
    a.blocks_per_level = 1;
    a.adapter_blocks = 1;
    return a;
}

GuidingMap random_guiding(int w, int h, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    GuidingMap g{Image(w, h, 3), 10.0};
    for (float& v : g.channels.data()) v = u(rng);
    for (float& v : g.channels.plane(GuidingMap::kDepth)) v *= 10.0f;
    return g;
}

ErrorCode decode_error(const std::vector<std::uint8_t>& bytes) {
    try {
        decode_weights(bytes);
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::invalid_argument;
}

} // namespace

TEST(Conv2d, MatchesNaiveOracleOnRandomCases) {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> dim(1, 9), ch(1, 4), ks(1, 4), st(1, 2), coin(0, 1);
    int checked = 0;
    while (checked < 50) {
        const int c = ch(rng), k = ks(rng), s = st(rng);
        const bool same = coin(rng);
        const bool depthwise = coin(rng) && c > 1;
        const int h = dim(rng) + (same ? 0 : k), w = dim(rng) + (same ? 0 : k);
        const int out_c = depthwise ? c * (1 + coin(rng)) : ch(rng);
        const int groups = depthwise ? c : 1;
        const Tensor in = random_tensor(1, c, h, w, rng);
        const Tensor kernel = random_tensor(out_c, c / groups, k, k, rng);
        std::vector<float> bias(out_c);
        for (float& b : bias) b = std::uniform_real_distribution<float>(-1, 1)(rng);
        const Tensor got = conv2d(in, kernel, bias, {s, same ? Padding::same : Padding::valid, groups}, 1);
        const Tensor want = oracle::naive_conv(in, kernel, bias, {s, same, groups});
        ASSERT_TRUE(got.same_shape(want)) << got.shape_string() << " vs " << want.shape_string();
        for (std::size_t i = 0; i < got.data.size(); ++i) ASSERT_NEAR(got.data[i], want.data[i], 1e-5);
        ++checked;
    }
}

TEST(Conv2d, SpecExampleShape) {
    std::mt19937_64 rng(1);
    const Tensor in = random_tensor(1, 3, 5, 5, rng);
    const Tensor k = random_tensor(2, 3, 3, 3, rng);
    const Tensor got = conv2d(in, k, std::span<const float>{});
    const Tensor want = oracle::naive_conv(in, k, {}, {});
    ASSERT_TRUE(got.same_shape(want));
    for (std::size_t i = 0; i < got.data.size(); ++i) EXPECT_NEAR(got.data[i], want.data[i], 1e-5);
}

TEST(Conv2d, IdentityAndConstant) {
    std::mt19937_64 rng(5);
    const Tensor in = random_tensor(1, 3, 6, 7, rng);
    Tensor eye(3, 3, 1, 1);
    for (int i = 0; i < 3; ++i) eye.at(i, i, 0, 0) = 1.0f;
    EXPECT_EQ(conv2d(in, eye, std::vector<float>(3, 0.0f)), in);
    const Tensor zero(2, 3, 3, 3);
    const Tensor c = conv2d(in, zero, std::vector<float>{0.25f, -2.0f});
    for (int y = 0; y < 6; ++y)
        for (int x = 0; x < 7; ++x) {
            EXPECT_EQ(c.at(0, 0, y, x), 0.25f);
            EXPECT_EQ(c.at(0, 1, y, x), -2.0f);
        }
}

TEST(Conv2d, ShapeMismatchIsReported) {
    const Tensor in(1, 3, 4, 4), k(2, 2, 3, 3);
    try {
        conv2d(in, k, std::span<const float>{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::shape_mismatch);
    }
    EXPECT_THROW(conv2d(Tensor(1, 2, 4, 4), Tensor(3, 2, 1, 1), std::vector<float>(2)), Error);
}

TEST(Ops, SimpleGateWithOnes) {
    std::mt19937_64 rng(3);
    Tensor x = random_tensor(1, 4, 3, 3, rng);
    for (int c = 0; c < 2; ++c) std::fill(x.plane(0, c), x.plane(0, c) + 9, 1.0f);
    const Tensor g = simple_gate(x);
    ASSERT_EQ(g.c, 2);
    for (int c = 0; c < 2; ++c)
        for (int i = 0; i < 9; ++i) EXPECT_EQ(g.plane(0, c)[i], x.plane(0, c + 2)[i]);
}

TEST(Ops, LayerNormAcrossChannels) {
    Tensor x(1, 2, 1, 1);
    x.at(0, 0, 0, 0) = 1.0f;
    x.at(0, 1, 0, 0) = 3.0f;
    const Tensor y = layer_norm_channels(x, std::vector<float>{1, 2}, std::vector<float>{0, 1}, 1e-6f);
    EXPECT_NEAR(y.at(0, 0, 0, 0), -1.0, 1e-5);
    EXPECT_NEAR(y.at(0, 1, 0, 0), 3.0, 1e-5);
}

TEST(Ops, ReflectPadAndCrop) {
    Tensor x(1, 1, 2, 3);
    for (int i = 0; i < 6; ++i) x.data[i] = static_cast<float>(i);
    const Tensor p = reflect_pad_bottom_right(x, 1, 2);
    ASSERT_EQ(p.h, 3);
    ASSERT_EQ(p.w, 5);
    EXPECT_EQ(p.at(0, 0, 0, 3), 1.0f); // mirrors column 1
    EXPECT_EQ(p.at(0, 0, 0, 4), 0.0f);
    EXPECT_EQ(p.at(0, 0, 2, 0), 0.0f); // mirrors row 0
    EXPECT_EQ(crop(p, 2, 3), x);
}

TEST(NafBlock, ZeroInputZeroWeightsGivesZero) {
    NetArchitecture a = small_arch();
    const WeightStore w = make_weights(a, WeightInit::identity_norm);
    const Tensor out = nafblock_forward(w, "enc0.block0", Tensor(1, 4, 6, 5), a.norm_eps);
    for (float v : out.data) EXPECT_EQ(v, 0.0f);
}

TEST(NafBlock, PreservesShape) {
    const NetArchitecture a = small_arch();
    const WeightStore w = make_weights(a, WeightInit::random, 9);
    std::mt19937_64 rng(4);
    for (auto [h, wd] : {std::pair{3, 3}, {7, 2}, {16, 9}}) {
        const Tensor in = random_tensor(1, 8, h, wd, rng);
        EXPECT_TRUE(nafblock_forward(w, "enc1.block0", in, a.norm_eps).same_shape(in));
    }
    EXPECT_THROW(nafblock_forward(w, "enc1.block0", Tensor(1, 4, 4, 4), a.norm_eps), Error);
}

TEST(Network, ZeroWeightsGiveHalfEverywhere) {
    const NetArchitecture defaults;
    const WeightStore w = make_weights(defaults, WeightInit::zero);
    const auto maps = forward(w, random_guiding(128, 128, 1));
    EXPECT_EQ(maps.width(), 128);
    EXPECT_EQ(maps.height(), 128);
    EXPECT_EQ(maps.space(), ColorSpace::srgb);
    for (float v : maps.image().data()) ASSERT_EQ(v, 0.5f);
}

TEST(Network, OutputStrictlyInsideUnitInterval) {
    const WeightStore w = make_weights(small_arch(), WeightInit::random, 3, 2.0);
    const auto maps = forward(w, random_guiding(16, 16, 2));
    for (float v : maps.image().data()) {
        EXPECT_GT(v, 0.0f);
        EXPECT_LT(v, 1.0f);
    }
}

TEST(Network, DeterministicAcrossRunsAndThreads) {
    const WeightStore w = make_weights(small_arch(3), WeightInit::random, 11);
    const GuidingMap g = random_guiding(24, 16, 5);
    const auto a = forward(w, g, {1, true});
    const auto b = forward(w, g, {4, true});
    const auto c = forward(w, g, {1, true});
    EXPECT_EQ(a, b);
    EXPECT_EQ(a, c);
}

TEST(Network, PadsAndCropsOddSizes) {
    const WeightStore w = make_weights(small_arch(2), WeightInit::random, 2);
    const auto maps = forward(w, random_guiding(13, 10, 6));
    EXPECT_EQ(maps.width(), 13);
    EXPECT_EQ(maps.height(), 10);
}

TEST(Network, DepthIsNormalisedByScale) {
    GuidingMap g = random_guiding(4, 4, 1);
    g.depth_scale = 8.0;
    g.channels.at(GuidingMap::kDepth, 1, 2) = 4.0f;
    const Tensor t = guiding_to_tensor(g);
    EXPECT_EQ(t.at(0, 2, 1, 2), 0.5f);
    EXPECT_EQ(t.at(0, 0, 3, 3), g.channels.at(0, 3, 3));
    EXPECT_EQ(t.at(0, 1, 3, 3), g.channels.at(1, 3, 3));
}

TEST(Network, AdapterGroupsFeedCanonicalChannels) {
    // Bias each adapter's projection differently and read the channel it lands in.
    WeightStore w = make_weights(small_arch(1), WeightInit::zero);
    for (int g = 0; g < 4; ++g) {
        auto& bias = w.get("adapter" + std::to_string(g) + ".proj.bias").values;
        bias = {static_cast<float>(g + 1), -static_cast<float>(g + 1)};
    }
    const Tensor out = forward_tensor(w, Tensor(1, 3, 4, 4));
    auto logistic = [](double v) { return static_cast<float>(1.0 / (1.0 + std::exp(-v))); };
    for (int g = 0; g < 4; ++g) {
        EXPECT_FLOAT_EQ(out.at(0, static_cast<int>(NetArchitecture::kGroups[g][0]), 0, 0), logistic(g + 1));
        EXPECT_FLOAT_EQ(out.at(0, static_cast<int>(NetArchitecture::kGroups[g][1]), 0, 0), logistic(-(g + 1)));
    }
    EXPECT_FLOAT_EQ(out.at(0, static_cast<int>(Channel::ZPos), 0, 0), logistic(1)); // front/back first
    EXPECT_FLOAT_EQ(out.at(0, static_cast<int>(Channel::Transparency), 0, 0), logistic(4));
}

TEST(Network, LocalityOutsideReceptiveSpan) {
    const NetArchitecture a = small_arch(2);
    WeightStore w = make_weights(a, WeightInit::random, 21);
    for (auto& r : w.records())
        if (r.name.find(".sca.weight") != std::string::npos) std::fill(r.values.begin(), r.values.end(), 0.0f);
    const int size = 64, px = 40, py = 20;
    GuidingMap g = random_guiding(size, size, 9);
    const auto base = forward(w, g, {1, true});
    g.channels.at(0, py, px) += 0.5f;
    const auto moved = forward(w, g, {1, true});
    const auto [x0, x1] = affected_span(a, px);
    const auto [y0, y1] = affected_span(a, py);
    ASSERT_GT(x0, 0);
    ASSERT_LT(x1, size - 1);
    bool changed_inside = false;
    for (int c = 0; c < kLightmapChannels; ++c)
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x) {
                const bool inside = x >= x0 && x <= x1 && y >= y0 && y <= y1;
                const float d = moved.image().at(c, y, x) - base.image().at(c, y, x);
                if (!inside) ASSERT_EQ(d, 0.0f) << "c" << c << " (" << x << "," << y << ")";
                changed_inside |= d != 0.0f;
            }
    EXPECT_TRUE(changed_inside);
}

TEST(Network, NonFiniteActivationNamesLayer) {
    WeightStore w = make_weights(small_arch(1), WeightInit::random, 4);
    std::fill(w.get("stem.bias").values.begin(), w.get("stem.bias").values.end(), 3e38f);
    w.get("stem.bias").values[0] = -3e38f;
    try {
        forward_tensor(w, Tensor(1, 3, 4, 4));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::non_finite);
        EXPECT_NE(std::string(e.what()).find("enc0.block0"), std::string::npos) << e.what();
    }
}

TEST(Network, RequiredRecordsFollowArchitecture) {
    const NetArchitecture a;
    const auto specs = required_records(a);
    EXPECT_EQ(specs.front().name, "stem.weight");
    EXPECT_EQ(specs.front().shape, (std::vector<std::uint32_t>{32, 3, 3, 3}));
    EXPECT_EQ(a.width(3), 256);
    EXPECT_EQ(a.width(4), 256);
    int adapters = 0;
    for (const auto& s : specs)
        if (s.name.ends_with(".proj.weight")) {
            ++adapters;
            EXPECT_EQ(s.shape[0], 2u);
        }
    EXPECT_EQ(adapters, 4);
}

TEST(Weights, RoundTrip) {
    test::TempDir dir;
    const WeightStore w = make_weights(small_arch(), WeightInit::random, 8);
    save_weights(w, dir.path() / "w.nsw");
    EXPECT_EQ(load_weights(dir.path() / "w.nsw"), w);
}

TEST(Weights, ByteLayout) {
    NetArchitecture a = small_arch(0);
    a.adapter_blocks = 0;
    a.blocks_per_level = 0;
    const WeightStore w = make_weights(a, WeightInit::random, 1);
    const auto bytes = encode_weights(w);
    ASSERT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "NSW1");
    std::uint32_t version, desc_len;
    std::memcpy(&version, bytes.data() + 4, 4);
    std::memcpy(&desc_len, bytes.data() + 8, 4);
    EXPECT_EQ(version, 1u);
    const auto desc = nlohmann::json::parse(bytes.begin() + 12, bytes.begin() + 12 + desc_len);
    EXPECT_EQ(desc.at("encoder_levels"), 0);
    std::size_t pos = 12 + desc_len;
    std::uint16_t name_len;
    std::memcpy(&name_len, bytes.data() + pos, 2);
    EXPECT_EQ(std::string(bytes.begin() + pos + 2, bytes.begin() + pos + 2 + name_len), "stem.weight");
    pos += 2 + name_len;
    EXPECT_EQ(bytes[pos], 4); // rank
    std::uint32_t dims[4];
    std::memcpy(dims, bytes.data() + pos + 1, 16);
    EXPECT_EQ(dims[0], 4u);
    EXPECT_EQ(dims[1], 3u);
    float first;
    std::memcpy(&first, bytes.data() + pos + 17, 4);
    EXPECT_EQ(first, w.get("stem.weight").values[0]);
    // records: 2 (stem) + 4 adapters x 2 (proj)
    std::size_t expected = 12 + desc_len;
    for (const auto& r : w.records()) expected += 2 + r.name.size() + 1 + 4 * r.shape.size() + 4 * r.values.size();
    EXPECT_EQ(bytes.size(), expected);
}

TEST(Weights, ValidationErrors) {
    const NetArchitecture a = small_arch();
    const WeightStore w = make_weights(a, WeightInit::random, 2);
    auto bytes = encode_weights(w);

    auto bad_magic = bytes;
    bad_magic[3] = '2';
    EXPECT_EQ(decode_error(bad_magic), ErrorCode::bad_magic);

    auto version = bytes;
    version[4] = 2;
    EXPECT_EQ(decode_error(version), ErrorCode::unsupported_version);

    WeightStore missing(a);
    for (const auto& r : w.records())
        if (r.name != "enc1.block0.conv2.weight") missing.add(r);
    try {
        decode_weights(encode_weights(missing));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::missing_record);
        EXPECT_NE(std::string(e.what()).find("enc1.block0.conv2.weight"), std::string::npos);
    }

    WeightStore extra = w;
    extra.add({"bogus", {1}, {0.0f}});
    EXPECT_EQ(decode_error(encode_weights(extra)), ErrorCode::unexpected_record);

    WeightStore reshaped(a);
    for (auto r : w.records()) {
        if (r.name == "stem.bias") r.shape = {2, 2};
        reshaped.add(r);
    }
    EXPECT_EQ(decode_error(encode_weights(reshaped)), ErrorCode::shape_mismatch);

    WeightStore nan = w;
    nan.get("down0.bias").values[0] = std::numeric_limits<float>::quiet_NaN();
    EXPECT_EQ(decode_error(encode_weights(nan)), ErrorCode::non_finite);

    // duplicate: append the first record again at the byte level
    auto dup = bytes;
    const auto first = encode_weights(w);
    const std::size_t header = 12 + [&] { std::uint32_t l; std::memcpy(&l, first.data() + 8, 4); return l; }();
    const auto& stem = w.records().front();
    const std::size_t rec_len = 2 + stem.name.size() + 1 + 16 + 4 * stem.values.size();
    dup.insert(dup.end(), first.begin() + header, first.begin() + header + rec_len);
    EXPECT_EQ(decode_error(dup), ErrorCode::duplicate_record);

    auto truncated = bytes;
    truncated.resize(truncated.size() - 3);
    EXPECT_EQ(decode_error(truncated), ErrorCode::truncated);
}
