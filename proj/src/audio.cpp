#include "emt/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "emt/binio.hpp"

namespace emt::audio {

namespace {

uint32_t rd_u32(std::span<const uint8_t> b, size_t off) {
    uint32_t v;
    std::memcpy(&v, b.data() + off, 4);
    return v;
}
uint16_t rd_u16(std::span<const uint8_t> b, size_t off) {
    uint16_t v;
    std::memcpy(&v, b.data() + off, 2);
    return v;
}
bool tag_is(std::span<const uint8_t> b, size_t off, const char* tag) {
    return std::memcmp(b.data() + off, tag, 4) == 0;
}

constexpr uint16_t kFormatPcm = 1;
constexpr uint16_t kFormatFloat = 3;
constexpr uint16_t kFormatMulaw = 7;

}  // namespace

float mulaw_expand(uint8_t byte) {
    // G.711 mu-law expansion to a 16-bit range value.
    uint8_t u = ~byte;
    int sign = u & 0x80;
    int exponent = (u >> 4) & 0x07;
    int mantissa = u & 0x0F;
    int magnitude = (((mantissa << 3) + 0x84) << exponent) - 0x84;
    int pcm = sign ? -magnitude : magnitude;  // max magnitude 32124
    return static_cast<float>(pcm) / 32768.0f;
}

AudioBuffer decode_wav(std::span<const uint8_t> bytes) {
    if (bytes.size() < 12 || !tag_is(bytes, 0, "RIFF") || !tag_is(bytes, 8, "WAVE"))
        throw CorruptContainer("not a RIFF/WAVE file");

    uint16_t format = 0, channels = 0, bits = 0;
    uint32_t rate = 0;
    bool have_fmt = false;
    std::span<const uint8_t> data_chunk;

    size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        uint32_t chunk_size = rd_u32(bytes, pos + 4);
        if (pos + 8 + chunk_size > bytes.size())
            throw CorruptContainer("chunk overruns file");
        if (tag_is(bytes, pos, "fmt ")) {
            if (chunk_size < 16) throw CorruptContainer("fmt chunk too small");
            format = rd_u16(bytes, pos + 8);
            channels = rd_u16(bytes, pos + 10);
            rate = rd_u32(bytes, pos + 12);
            bits = rd_u16(bytes, pos + 22);
            have_fmt = true;
        } else if (tag_is(bytes, pos, "data")) {
            data_chunk = bytes.subspan(pos + 8, chunk_size);
        }
        pos += 8 + chunk_size + (chunk_size & 1);
    }
    if (!have_fmt || data_chunk.data() == nullptr)
        throw CorruptContainer("missing fmt or data chunk");
    if (channels != 1) throw UnsupportedFormat("only mono audio is supported");
    if (format == kFormatFloat) throw UnsupportedFormat("float PCM is not supported");

    AudioBuffer out;
    out.sample_rate = static_cast<int>(rate);
    if (format == kFormatPcm && bits == 16) {
        size_t n = data_chunk.size() / 2;
        out.samples.resize(n);
        for (size_t i = 0; i < n; ++i) {
            int16_t s;
            std::memcpy(&s, data_chunk.data() + 2 * i, 2);
            out.samples[i] = static_cast<float>(s) / 32768.0f;
        }
    } else if (format == kFormatMulaw && bits == 8) {
        out.samples.resize(data_chunk.size());
        for (size_t i = 0; i < data_chunk.size(); ++i)
            out.samples[i] = mulaw_expand(data_chunk[i]);
    } else {
        throw UnsupportedFormat("unsupported codec: format tag " + std::to_string(format) +
                                ", " + std::to_string(bits) + " bits");
    }
    return out;
}

AudioBuffer load_wav(const std::string& path) {
    auto bytes = read_file(path);
    return decode_wav(bytes);
}

std::vector<uint8_t> encode_wav_pcm16(const AudioBuffer& buffer) {
    uint32_t data_size = static_cast<uint32_t>(buffer.samples.size() * 2);
    ByteWriter w;
    w.bytes(std::span<const uint8_t>(reinterpret_cast<const uint8_t*>("RIFF"), 4));
    w.u32(36 + data_size);
    w.bytes(std::span<const uint8_t>(reinterpret_cast<const uint8_t*>("WAVE"), 4));
    w.bytes(std::span<const uint8_t>(reinterpret_cast<const uint8_t*>("fmt "), 4));
    w.u32(16);
    w.u16(1);  // PCM
    w.u16(1);  // mono
    w.u32(static_cast<uint32_t>(buffer.sample_rate));
    w.u32(static_cast<uint32_t>(buffer.sample_rate * 2));
    w.u16(2);
    w.u16(16);
    w.bytes(std::span<const uint8_t>(reinterpret_cast<const uint8_t*>("data"), 4));
    w.u32(data_size);
    for (float s : buffer.samples) {
        float clamped = std::clamp(s, -1.0f, 1.0f);
        int v = static_cast<int>(std::lrintf(clamped * 32768.0f));
        auto pcm = static_cast<int16_t>(std::clamp(v, -32768, 32767));
        w.u16(static_cast<uint16_t>(pcm));
    }
    return w.take();
}

void save_wav(const std::string& path, const AudioBuffer& buffer) {
    auto bytes = encode_wav_pcm16(buffer);
    write_file(path, bytes);
}

AudioBuffer decode_raw_pcm16_8k(std::span<const uint8_t> bytes) {
    AudioBuffer out;
    out.sample_rate = kPipelineRate;
    size_t n = bytes.size() / 2;
    out.samples.resize(n);
    for (size_t i = 0; i < n; ++i) {
        int16_t s;
        std::memcpy(&s, bytes.data() + 2 * i, 2);
        out.samples[i] = static_cast<float>(s) / 32768.0f;
    }
    return out;
}

AudioBuffer resample_to_8k(const AudioBuffer& buffer) {
    if (buffer.sample_rate == kPipelineRate) return buffer;
    switch (buffer.sample_rate) {
        case 16000:
        case 44100:
        case 48000:
            break;
        default:
            throw UnsupportedRate(buffer.sample_rate);
    }
    double ratio = static_cast<double>(buffer.sample_rate) / kPipelineRate;
    size_t out_n = static_cast<size_t>(buffer.samples.size() / ratio);
    AudioBuffer out;
    out.sample_rate = kPipelineRate;
    out.samples.resize(out_n);
    for (size_t i = 0; i < out_n; ++i) {
        double pos = i * ratio;
        size_t i0 = static_cast<size_t>(pos);
        size_t i1 = std::min(i0 + 1, buffer.samples.size() - 1);
        double frac = pos - i0;
        out.samples[i] = static_cast<float>((1.0 - frac) * buffer.samples[i0] +
                                            frac * buffer.samples[i1]);
    }
    return out;
}

std::vector<SecondSegment> segment_seconds(const AudioBuffer& buffer,
                                           const std::string& source_id) {
    std::vector<SecondSegment> out;
    size_t n_seconds = buffer.samples.size() / kSamplesPerSecond;
    out.reserve(n_seconds);
    for (size_t i = 0; i < n_seconds; ++i) {
        SecondSegment seg;
        seg.samples.assign(buffer.samples.begin() + i * kSamplesPerSecond,
                           buffer.samples.begin() + (i + 1) * kSamplesPerSecond);
        seg.source_id = source_id;
        seg.index = i;
        out.push_back(std::move(seg));
    }
    return out;
}

}  // namespace emt::audio
