// Child process for ExternalProcessBackend tests. Replies with an 8-d vector
// derived from the bytes; payloads starting with "FAIL" get d = 0, "EXIT"
// terminates without replying.
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

namespace {

bool read_exact(void* p, std::size_t n) { return std::fread(p, 1, n, stdin) == n; }

void write_u32(std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  std::fwrite(b, 1, 4, stdout);
}

}  // namespace

int main() {
  for (;;) {
    unsigned char hdr[4];
    if (!read_exact(hdr, 4)) return 0;
    const std::uint32_t len = hdr[0] | (hdr[1] << 8) | (hdr[2] << 16) | (static_cast<std::uint32_t>(hdr[3]) << 24);
    std::string bytes(len, '\0');
    if (len && !read_exact(bytes.data(), len)) return 1;
    if (bytes.rfind("EXIT", 0) == 0) return 0;
    if (bytes.rfind("FAIL", 0) == 0) {
      write_u32(0);
    } else {
      write_u32(8);
      for (std::uint32_t i = 0; i < 8; ++i) {
        float f = static_cast<float>(len) + static_cast<float>(i) * 0.5f;
        for (unsigned char c : bytes) f += static_cast<float>(c) * 0.001f;
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        write_u32(bits);
      }
    }
    std::fflush(stdout);
  }
}
