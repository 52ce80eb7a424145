/// [[ arrayspec: length(ptr1) >= n ]]
/// [[ arrayspec: length(ptr2) >= n ]]
int memcmp(const uint8 *ptr1, const uint8 *ptr2, int n);

uint8 a[8];
uint8 b[8];
int same;

void cmp(int k) {
  if (k >= 1 && k <= 8) {
    same = memcmp(a, b, k);
  }
}
