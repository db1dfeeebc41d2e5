#include <cstdio>

int main(int, char**) {
  std::fprintf(stderr, "lcslab: command surface under construction\n");
  return 2;
}
