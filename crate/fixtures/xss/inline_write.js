const show = function (request, response) {
  var value = request.value;
  log("show");
  response.write(escape(value));
};
