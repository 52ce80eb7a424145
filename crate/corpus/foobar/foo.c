float bar(float x);

float foo(float x) {
  return 1.0 / bar(x);
}
