#pragma once

#include <cstdio>
#include <string>

namespace sfs {

//! Round-trip decimal form used in every CSV we write.
inline std::string format_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace sfs
