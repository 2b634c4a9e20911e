#ifndef CRMTEXT_VERSION_HPP
#define CRMTEXT_VERSION_HPP

namespace crmtext {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace crmtext

#endif  // CRMTEXT_VERSION_HPP
