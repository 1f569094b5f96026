#include "qballot/backend.hpp"

#include "qballot/error.hpp"

namespace qballot {

std::string_view backend_name(Backend b) { return b == Backend::dense ? "dense" : "branch"; }

Backend parse_backend(std::string_view name) {
    if (name == "dense") {
        return Backend::dense;
    }
    if (name == "branch") {
        return Backend::branch;
    }
    throw ValidationError("unknown backend '" + std::string(name) + "' (expected dense or branch)");
}

}  // namespace qballot
