void tone(int freq, int time){
  int periodo = 1000000 / freq;
  int t = freq * time / 1000;
  for(int i; i < t; i++){
    set_buzzer();  
    delay_us(periodo/2);						 
    clear_buzzer();                              
    delay_us(periodo/2);	
  }
}
