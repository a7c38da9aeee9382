// SPDX-License-Identifier: Apache-2.0
#include <bpnet/error.hpp>

namespace bpnet {

void fail(ErrorKind kind, const std::string &what) { throw Error(kind, what); }

} // namespace bpnet
