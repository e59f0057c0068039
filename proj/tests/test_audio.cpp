#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "emt/audio.hpp"
#include "emt/synth.hpp"

using namespace emt::audio;

namespace {

std::vector<uint8_t> wav_bytes(uint16_t format, uint16_t channels, uint32_t rate,
                               uint16_t bits, const std::vector<uint8_t>& payload) {
    std::vector<uint8_t> out;
    auto push32 = [&](uint32_t v) {
        for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
    };
    auto push16 = [&](uint16_t v) {
        out.push_back(static_cast<uint8_t>(v & 0xFF));
        out.push_back(static_cast<uint8_t>(v >> 8));
    };
    auto push_tag = [&](const char* t) { out.insert(out.end(), t, t + 4); };
    push_tag("RIFF");
    push32(36 + static_cast<uint32_t>(payload.size()));
    push_tag("WAVE");
    push_tag("fmt ");
    push32(16);
    push16(format);
    push16(channels);
    push32(rate);
    push32(rate * channels * bits / 8);
    push16(static_cast<uint16_t>(channels * bits / 8));
    push16(bits);
    push_tag("data");
    push32(static_cast<uint32_t>(payload.size()));
    out.insert(out.end(), payload.begin(), payload.end());
    return out;
}

// Reference G.711 expansion, written from the segment/bias definition
// independently of the library routine.
int mulaw_reference(uint8_t byte) {
    int u = ~byte & 0xFF;
    int t = ((u & 0x0F) << 3) + 0x84;
    t <<= (u & 0x70) >> 4;
    return (u & 0x80) ? (0x84 - t) : (t - 0x84);
}

}  // namespace

TEST_CASE("decode_wav: PCM16 silence and normalization") {
    std::vector<uint8_t> payload(16000, 0);  // 1 s of zero words
    auto buf = decode_wav(wav_bytes(1, 1, 8000, 16, payload));
    CHECK(buf.sample_rate == 8000);
    REQUIRE(buf.samples.size() == 8000);
    for (float s : buf.samples) CHECK(s == 0.0f);

    std::vector<uint8_t> one_max = {0xFF, 0x7F};  // 32767
    auto buf2 = decode_wav(wav_bytes(1, 1, 8000, 16, one_max));
    REQUIRE(buf2.samples.size() == 1);
    CHECK(buf2.samples[0] == doctest::Approx(32767.0 / 32768.0).epsilon(1e-9));
}

TEST_CASE("decode_wav: mu-law expansion matches the G.711 oracle") {
    CHECK(mulaw_expand(0xFF) == 0.0f);
    for (int b = 0; b < 256; ++b) {
        float expect = static_cast<float>(mulaw_reference(static_cast<uint8_t>(b))) / 32768.0f;
        CHECK(mulaw_expand(static_cast<uint8_t>(b)) == doctest::Approx(expect).epsilon(1e-12));
    }
    std::vector<uint8_t> payload = {0xFF, 0x00, 0x80};
    auto buf = decode_wav(wav_bytes(7, 1, 8000, 8, payload));
    REQUIRE(buf.samples.size() == 3);
    CHECK(buf.samples[0] == 0.0f);
}

TEST_CASE("decode_wav rejects unsupported formats") {
    CHECK_THROWS_AS(decode_wav(wav_bytes(1, 2, 8000, 16, {0, 0, 0, 0})), UnsupportedFormat);
    CHECK_THROWS_AS(decode_wav(wav_bytes(3, 1, 8000, 32, {0, 0, 0, 0})), UnsupportedFormat);
    CHECK_THROWS_AS(decode_wav(wav_bytes(2, 1, 8000, 4, {0, 0})), UnsupportedFormat);
    std::vector<uint8_t> garbage = {'N', 'O', 'P', 'E'};
    CHECK_THROWS_AS(decode_wav(garbage), CorruptContainer);
}

TEST_CASE("PCM16 decode-encode-decode roundtrip is bit-exact") {
    auto buf = emt::synth::white_noise(0.5, 0.8, 123);
    auto bytes = encode_wav_pcm16(buf);
    auto decoded = decode_wav(bytes);
    auto bytes2 = encode_wav_pcm16(decoded);
    auto decoded2 = decode_wav(bytes2);
    REQUIRE(decoded.samples.size() == decoded2.samples.size());
    for (size_t i = 0; i < decoded.samples.size(); ++i)
        CHECK(decoded.samples[i] == decoded2.samples[i]);
}

TEST_CASE("resample_to_8k") {
    SUBCASE("8 kHz input is returned unchanged") {
        auto buf = emt::synth::white_noise(0.25, 0.5, 9);
        auto out = resample_to_8k(buf);
        CHECK(out.samples == buf.samples);
    }
    SUBCASE("constant signal survives resampling") {
        AudioBuffer buf;
        buf.sample_rate = 16000;
        buf.samples.assign(16000, 0.5f);
        auto out = resample_to_8k(buf);
        CHECK(out.sample_rate == 8000);
        CHECK(out.samples.size() == 8000);
        for (float s : out.samples) CHECK(s == doctest::Approx(0.5).epsilon(1e-7));
    }
    SUBCASE("16 kHz 1 kHz sine resamples within tolerance") {
        auto buf = emt::synth::sine(1000.0, 1.0, 0.5, 16000);
        auto out = resample_to_8k(buf);
        REQUIRE(out.samples.size() == 8000);
        for (size_t i = 0; i < out.samples.size(); ++i) {
            double expect = 0.5 * std::sin(2.0 * std::numbers::pi * 1000.0 * i / 8000.0);
            CHECK(std::abs(out.samples[i] - expect) < 0.02);
        }
    }
    SUBCASE("unsupported rate is rejected") {
        AudioBuffer buf;
        buf.sample_rate = 11025;
        buf.samples.assign(100, 0.0f);
        CHECK_THROWS_AS(resample_to_8k(buf), UnsupportedRate);
    }
}

TEST_CASE("segment_seconds") {
    AudioBuffer buf;
    buf.sample_rate = 8000;

    SUBCASE("floor division with trailing drop") {
        buf.samples.resize(20000);
        for (size_t i = 0; i < buf.samples.size(); ++i)
            buf.samples[i] = static_cast<float>(i % 100) / 100.0f;
        auto segs = segment_seconds(buf, "rec");
        REQUIRE(segs.size() == 2);
        CHECK(segs[0].index == 0);
        CHECK(segs[1].index == 1);
        // Concatenation equals the 16000-sample prefix.
        for (size_t i = 0; i < 8000; ++i) {
            CHECK(segs[0].samples[i] == buf.samples[i]);
            CHECK(segs[1].samples[i] == buf.samples[8000 + i]);
        }
    }
    SUBCASE("below one second yields nothing") {
        buf.samples.resize(7999);
        CHECK(segment_seconds(buf).empty());
    }
    SUBCASE("exactly one second yields the input") {
        buf.samples.assign(8000, 0.25f);
        auto segs = segment_seconds(buf);
        REQUIRE(segs.size() == 1);
        CHECK(segs[0].samples == buf.samples);
    }
}
