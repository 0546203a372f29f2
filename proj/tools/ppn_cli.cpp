// Temporary CLI shell; full command set added with the analysis modules.
#include <cstdio>

int main() {
  std::puts("ppn cli placeholder");
  return 0;
}
