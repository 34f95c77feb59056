#pragma once

#define BRANCHCAT_VERSION "0.1.0"

namespace branchcat {
inline const char* version() { return BRANCHCAT_VERSION; }
}
