# 파이프라인 결과를 사람이 읽는 표로 바꾸는 렌더러
