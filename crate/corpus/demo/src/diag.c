/* Diagnostics. Never called from the application entry. */

int diag_value;

int diag_read(int p[]) {
  return p[0];
}

void diag_probe(void) {
  diag_value = diag_read(NULL);
  diag_value = 1;
  diag_value = 2;
}

void diag_dump(void) {
  log_write(diag_value);
}
