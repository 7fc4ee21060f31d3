#include <iostream>

int main() {
  std::cerr << "narf: command-line driver under construction\n";
  return 2;
}
