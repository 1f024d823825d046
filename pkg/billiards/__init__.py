# 페널티 근사와 반사 법칙 슈팅으로 당구 궤적을 계산하는 수치 라이브러리
