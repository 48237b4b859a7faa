#include "sdrtk/types.hpp"

#include <algorithm>
#include <cctype>

#include "sdrtk/error.hpp"

namespace sdrtk {

namespace {

std::string normalized(std::string_view text) {
    std::string out;
    for (char c : text) {
        if (c == ' ' || c == '-' || c == '_') continue;
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

}  // namespace

std::string to_string(DemodMode mode) {
    switch (mode) {
        case DemodMode::AM: return "AM";
        case DemodMode::DSB: return "DSB";
        case DemodMode::SSB_USB: return "SSB_USB";
        case DemodMode::SSB_LSB: return "SSB_LSB";
        case DemodMode::NFM: return "NFM";
        case DemodMode::WFM: return "WFM";
    }
    return "?";
}

std::string to_string(WindowKind kind) {
    switch (kind) {
        case WindowKind::Blackman: return "Blackman";
        case WindowKind::BlackmanHarris4: return "Blackman-Harris 4";
        case WindowKind::BlackmanHarris7: return "Blackman-Harris 7";
    }
    return "?";
}

DemodMode parse_mode(std::string_view text) {
    const std::string s = normalized(text);
    if (s == "am") return DemodMode::AM;
    if (s == "dsb") return DemodMode::DSB;
    if (s == "ssbusb" || s == "usb") return DemodMode::SSB_USB;
    if (s == "ssblsb" || s == "lsb") return DemodMode::SSB_LSB;
    if (s == "nfm" || s == "fm") return DemodMode::NFM;
    if (s == "wfm") return DemodMode::WFM;
    throw ValueError("unknown demodulation mode '" + std::string(text) + "'");
}

WindowKind parse_window(std::string_view text) {
    const std::string s = normalized(text);
    if (s == "blackman") return WindowKind::Blackman;
    if (s == "blackmanharris4" || s == "bh4") return WindowKind::BlackmanHarris4;
    if (s == "blackmanharris7" || s == "bh7") return WindowKind::BlackmanHarris7;
    throw ValueError("unknown window '" + std::string(text) + "'");
}

}  // namespace sdrtk
