uint32_t usart_puts(uint8_t *pstring) {
  uint32_t i;
  while(*(pstring + i)) {
    i++;
  }
  return i;
}
