#include <fstream>

#include "doctest.h"
#include "sdrtk/error.hpp"
#include "sdrtk/iq_io.hpp"
#include "support.hpp"

using namespace sdrtk;
using testing_support::TempDir;

TEST_CASE("decode maps the byte endpoints and midpoint") {
    const std::vector<std::uint8_t> ends{0, 255};
    auto s = decode_rtl_bytes(ends);
    REQUIRE(s.size() == 1);
    CHECK(s[0].real() == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(s[0].imag() == doctest::Approx(1.0).epsilon(1e-15));

    const std::vector<std::uint8_t> mid{128, 128};
    s = decode_rtl_bytes(mid);
    CHECK(s[0].real() == doctest::Approx(0.5 / 127.5).epsilon(1e-12));
    CHECK(s[0].imag() == doctest::Approx(0.0039216).epsilon(1e-4));
}

TEST_CASE("every byte value survives decode then encode") {
    for (int b = 0; b < 256; ++b) {
        const std::vector<std::uint8_t> in{static_cast<std::uint8_t>(b), static_cast<std::uint8_t>(b)};
        const auto out = encode_rtl_bytes(decode_rtl_bytes(in));
        REQUIRE(out == in);
    }
}

TEST_CASE("encode rounds half up and clamps") {
    const std::vector<Sample> s{{-1.0, 1.0}, {0.0, 0.0}, {-7.0, 3.0}};
    const auto b = encode_rtl_bytes(s);
    CHECK(b == std::vector<std::uint8_t>{0, 255, 128, 128, 0, 255});
}

TEST_CASE("codec error paths") {
    SUBCASE("odd byte count names the offset") {
        const std::vector<std::uint8_t> odd{1, 2, 3};
        try {
            decode_rtl_bytes(odd);
            FAIL("expected a format error");
        } catch (const FormatError& e) {
            CHECK(std::string(e.what()).find("offset 2") != std::string::npos);
            CHECK(e.kind() == ErrorKind::Format);
        }
    }
    SUBCASE("non-finite sample names the index") {
        const std::vector<Sample> s{{0, 0}, {0, 0}, {std::nan(""), 0}};
        try {
            encode_rtl_bytes(s);
            FAIL("expected a value error");
        } catch (const ValueError& e) {
            CHECK(std::string(e.what()).find("index 2") != std::string::npos);
        }
    }
}

TEST_CASE("capture round trip is byte identical") {
    TempDir dir;
    std::vector<std::uint8_t> bytes(2 * 100003);
    std::mt19937 g(5);
    for (auto& b : bytes) b = static_cast<std::uint8_t>(g());
    {
        std::ofstream f(dir / "in.raw", std::ios::binary);
        f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    }
    CaptureMeta m;
    m.sample_rate_hz = 2.4e6;
    m.center_hz = 100e6;
    write_capture_meta(m, dir / "in.json");

    const auto blocks = read_capture(dir / "in.raw", dir / "in.json", 4096);
    REQUIRE(blocks.size() == (100003 + 4095) / 4096);
    CHECK(blocks.back().samples.size() == 100003 % 4096);
    CHECK(blocks[3].start_index == 3 * 4096);
    write_capture(blocks, dir / "out.raw", dir / "out.json", m);

    std::ifstream f(dir / "out.raw", std::ios::binary);
    std::vector<std::uint8_t> back((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    CHECK(back == bytes);
    const auto m2 = read_capture_meta(dir / "out.json");
    CHECK(m2.sample_rate_hz == m.sample_rate_hz);
    CHECK(m2.center_hz == m.center_hz);
}

TEST_CASE("capture metadata validation") {
    TempDir dir;
    auto write = [&](const std::string& text) {
        std::ofstream(dir / "m.json") << text;
        return dir / "m.json";
    };
    SUBCASE("gain defaults to 19 dB") {
        const auto m = read_capture_meta(write(R"({"sample_rate_hz":1e6,"center_hz":1e8,"format":"u8_iq_interleaved"})"));
        CHECK(m.gain_db == 19.0);
    }
    SUBCASE("format tag must match") {
        CHECK_THROWS_AS(read_capture_meta(write(R"({"sample_rate_hz":1e6,"center_hz":1e8,"format":"s16"})")),
                        ConfigError);
    }
    SUBCASE("hardware captures enforce the rate ceiling and tuner range") {
        CHECK_THROWS_AS(read_capture_meta(write(
                            R"({"sample_rate_hz":3.2e6,"center_hz":1e8,"format":"u8_iq_interleaved","hardware":true})")),
                        ConfigError);
        CHECK_THROWS_AS(read_capture_meta(write(
                            R"({"sample_rate_hz":2.4e6,"center_hz":2e9,"format":"u8_iq_interleaved","hardware":true})")),
                        ConfigError);
        CHECK_NOTHROW(read_capture_meta(
            write(R"({"sample_rate_hz":2.4e6,"center_hz":2e9,"format":"u8_iq_interleaved"})")));
    }
    SUBCASE("missing file is an I/O error") {
        CHECK_THROWS_AS(read_capture_meta(dir / "absent.json"), IoError);
    }
    SUBCASE("malformed JSON") {
        CHECK_THROWS_AS(read_capture_meta(write("{not json")), ConfigError);
    }
}

TEST_CASE("truncated capture with a lone I byte is a format error") {
    TempDir dir;
    {
        std::ofstream f(dir / "t.raw", std::ios::binary);
        f.write("\x01\x02\x03", 3);
    }
    CaptureMeta m;
    m.sample_rate_hz = 48000;
    write_capture_meta(m, dir / "t.json");
    CaptureReader r(dir / "t.raw", dir / "t.json");
    CHECK_THROWS_AS(r.next(), FormatError);
}

TEST_CASE("capture reader rewinds and keeps counting") {
    TempDir dir;
    CaptureMeta m;
    m.sample_rate_hz = 48000;
    std::vector<Sample> s(10, Sample{0.5, -0.5});
    IqBlock b;
    b.samples = s;
    b.sample_rate_hz = 48000;
    write_capture(std::span<const IqBlock>(&b, 1), dir / "c.raw", dir / "c.json", m);
    CaptureReader r(dir / "c.raw", dir / "c.json", 4);
    int n = 0;
    while (r.next()) ++n;
    CHECK(n == 3);
    r.rewind(true);
    const auto again = r.next();
    REQUIRE(again);
    CHECK(again->start_index == 10);
}

TEST_CASE("WAV round trip and format checks") {
    TempDir dir;
    AudioBlock a;
    a.rate_hz = 48000;
    for (int i = 0; i < 1000; ++i) a.samples.push_back(std::sin(i * 0.01) * 0.9);
    a.samples.push_back(2.0);  // clamps to full scale
    write_wav(a, dir / "a.wav");
    const auto back = read_wav(dir / "a.wav");
    REQUIRE(back.samples.size() == a.samples.size());
    CHECK(back.rate_hz == 48000);
    for (std::size_t i = 0; i + 1 < a.samples.size(); ++i) {
        REQUIRE(std::abs(back.samples[i] - a.samples[i]) <= 0.5 / 32767.0 + 1e-12);
    }
    CHECK(back.samples.back() == 1.0);

    // A stereo header must be rejected.
    std::ifstream f(dir / "a.wav", std::ios::binary);
    std::vector<char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    bytes[22] = 2;
    std::ofstream(dir / "s.wav", std::ios::binary).write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    CHECK_THROWS_AS(read_wav(dir / "s.wav"), FormatError);
    std::ofstream(dir / "junk.wav") << "hello";
    CHECK_THROWS_AS(read_wav(dir / "junk.wav"), FormatError);
}

TEST_CASE("PCM16 scaling") {
    CHECK(audio_to_pcm16(1.0) == 32767);
    CHECK(audio_to_pcm16(-1.0) == -32767);
    CHECK(audio_to_pcm16(0.5) == 16384);
    CHECK(pcm16_to_audio(32767) == 1.0);
    CHECK_THROWS_AS(audio_to_pcm16(INFINITY), ValueError);
}
